#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xmc/collective.hpp"
#include "xmc/factors.hpp"
#include "xmc/rng.hpp"
#include "xmc/schema.hpp"

namespace xmc {

// Per-entity draw budgets. quotas[k] is the expected number of observations
// incident to entity k, so the quotas sum to twice the draw count.
template <class Scalar>
struct SamplingPlan {
  SchemaPtr schema;
  std::vector<Scalar> quotas;
  Index total = 0;
  std::uint64_t seed = 0;
};

template <class Scalar>
void validate_plan(const SamplingPlan<Scalar>& plan) {
  if (!plan.schema) throw std::invalid_argument("sampling plan: null schema");
  if (static_cast<int>(plan.quotas.size()) != plan.schema->entity_count())
    throw std::invalid_argument("sampling plan: quota count mismatch");
  if (plan.total < 1) throw std::invalid_argument("sampling plan: total draw count must be positive");
  Scalar sum = 0;
  for (Scalar q : plan.quotas) {
    if (!(q >= Scalar(0))) throw std::invalid_argument("sampling plan: negative quota");
    sum += q;
  }
  const Scalar target = Scalar(2) * Scalar(plan.total);
  if (std::abs(sum - target) > Scalar(1e-9) * std::max<Scalar>(Scalar(1), target))
    throw std::invalid_argument("sampling plan: quotas must sum to twice the draw count");
}

enum class QuotaPreset { Proportional, Balanced };

// Proportional: quotas follow each entity's concatenated cell count, which
// makes the cell law uniform on equal-size chains. Balanced: quotas follow
// entity sizes alone.
template <class Scalar>
SamplingPlan<Scalar> make_plan(SchemaPtr schema, Index total, QuotaPreset preset, std::uint64_t seed) {
  if (!schema) throw std::invalid_argument("make_plan: null schema");
  if (total < 1) throw std::invalid_argument("make_plan: total draw count must be positive");
  const CollectiveSchema& s = *schema;
  std::vector<Scalar> weight(s.entity_count());
  for (int k = 0; k < s.entity_count(); ++k)
    weight[k] = preset == QuotaPreset::Proportional
                    ? Scalar(s.entity_size(k)) * Scalar(s.entity_width(k))
                    : Scalar(s.entity_size(k));
  const Scalar wsum = std::accumulate(weight.begin(), weight.end(), Scalar(0));
  if (!(wsum > Scalar(0))) throw std::invalid_argument("make_plan: degenerate schema weights");
  SamplingPlan<Scalar> plan;
  plan.schema = std::move(schema);
  plan.total = total;
  plan.seed = seed;
  plan.quotas.resize(weight.size());
  for (std::size_t k = 0; k < weight.size(); ++k)
    plan.quotas[k] = Scalar(2) * Scalar(total) * weight[k] / wsum;
  return plan;
}

struct NoiseSpec {
  enum class Kind { None, Gaussian };
  Kind kind = Kind::None;
  double sigma = 0.0;
};

// Ordered multiset of sampled cells; duplicates are kept. Values are filled
// by observe(); the plan travels along for inverse-intensity weighting.
template <class Scalar>
struct ObservationSet {
  SchemaPtr schema;
  std::vector<BasisIndex> indices;
  std::vector<Scalar> values;  // empty until observed
  NoiseSpec noise;
  std::optional<SamplingPlan<Scalar>> plan;
};

// Draw: entity by quota share, then a uniform cell of its concatenated
// matrix, mapped back to the owning view. Byte-for-byte deterministic for a
// fixed plan.
template <class Scalar>
ObservationSet<Scalar> sample(const SamplingPlan<Scalar>& plan) {
  validate_plan(plan);
  const CollectiveSchema& s = *plan.schema;
  for (int k = 0; k < s.entity_count(); ++k)
    if (plan.quotas[k] > Scalar(0) && (s.entity_size(k) == 0 || s.entity_width(k) == 0))
      throw std::invalid_argument("sample: entity with positive quota but no cells");
  std::vector<double> cum(plan.quotas.size());
  double acc = 0;
  for (std::size_t k = 0; k < plan.quotas.size(); ++k) {
    acc += static_cast<double>(plan.quotas[k]);
    cum[k] = acc;
  }
  Rng rng(plan.seed);
  ObservationSet<Scalar> obs;
  obs.schema = plan.schema;
  obs.plan = plan;
  obs.indices.reserve(plan.total);
  for (Index t = 0; t < plan.total; ++t) {
    const int k = static_cast<int>(rng.categorical(cum));
    const Index i = rng.uniform_below(s.entity_size(k));
    const Index c = rng.uniform_below(s.entity_width(k));
    obs.indices.push_back(s.entity_cell(k, i, c));
  }
  return obs;
}

// Expected multiplicity of a cell under the plan: how many of the draws land
// there on average. Summing over all cells gives back the draw count.
template <class Scalar>
Scalar cell_intensity(const SamplingPlan<Scalar>& plan, const BasisIndex& idx) {
  const CollectiveSchema& s = *plan.schema;
  if (!s.contains(idx)) throw std::out_of_range("cell_intensity: cell out of range");
  const ViewDecl& d = s.view(idx.view);
  const auto density = [&](int k) {
    return plan.quotas[k] / (Scalar(2) * Scalar(s.entity_size(k)) * Scalar(s.entity_width(k)));
  };
  return density(d.row_entity) + density(d.col_entity);
}

template <class Scalar>
ObservationSet<Scalar> observe(const CollectiveMatrix<Scalar>& truth, const ObservationSet<Scalar>& drawn,
                               const NoiseSpec& noise, std::uint64_t seed) {
  if (!truth.schema || !drawn.schema || !schema_equal(*truth.schema, *drawn.schema))
    throw std::invalid_argument("observe: value and draws built over different schemas");
  ObservationSet<Scalar> out = drawn;
  out.noise = noise;
  out.values.resize(out.indices.size());
  Rng rng(seed);
  for (std::size_t s_i = 0; s_i < out.indices.size(); ++s_i) {
    const BasisIndex& idx = out.indices[s_i];
    Scalar y = truth.views[idx.view](idx.i, idx.j);
    if (noise.kind == NoiseSpec::Kind::Gaussian && noise.sigma > 0)
      y += static_cast<Scalar>(noise.sigma * rng.normal());
    out.values[s_i] = y;
  }
  return out;
}

// Multiplicity-weighted restriction to the observed cells.
template <class Scalar>
SparseCollective<Scalar> apply_p_omega(const CollectiveMatrix<Scalar>& x, const ObservationSet<Scalar>& obs) {
  if (!x.schema || !obs.schema || !schema_equal(*x.schema, *obs.schema))
    throw std::invalid_argument("apply_p_omega: schema mismatch");
  SparseCollective<Scalar> out;
  out.schema = x.schema;
  out.entries.reserve(obs.indices.size());
  for (const BasisIndex& idx : obs.indices)
    out.entries.push_back({idx, x.views[idx.view](idx.i, idx.j)});
  return out;
}

// Inverse-intensity weighted restriction; unbiased for the identity under
// the plan's law.
template <class Scalar>
SparseCollective<Scalar> apply_r_omega(const CollectiveMatrix<Scalar>& x, const ObservationSet<Scalar>& obs,
                                       const SamplingPlan<Scalar>& plan) {
  if (!x.schema || !obs.schema || !schema_equal(*x.schema, *obs.schema))
    throw std::invalid_argument("apply_r_omega: schema mismatch");
  if (!plan.schema || !schema_equal(*x.schema, *plan.schema))
    throw std::invalid_argument("apply_r_omega: plan schema mismatch");
  SparseCollective<Scalar> out;
  out.schema = x.schema;
  out.entries.reserve(obs.indices.size());
  for (const BasisIndex& idx : obs.indices) {
    const Scalar p = cell_intensity(plan, idx);
    if (!(p > Scalar(0))) throw std::invalid_argument("apply_r_omega: cell with zero intensity");
    out.entries.push_back({idx, x.views[idx.view](idx.i, idx.j) / p});
  }
  return out;
}

// Conditioning factor of the plan: grows with the spread between the densest
// and sparsest per-entity coverage.
template <class Scalar>
Scalar sampling_condition_number(const SamplingPlan<Scalar>& plan) {
  validate_plan(plan);
  const CollectiveSchema& s = *plan.schema;
  Scalar dmin = std::numeric_limits<Scalar>::infinity();
  Scalar dmax = 0;
  for (int k = 0; k < s.entity_count(); ++k) {
    const Scalar cells = Scalar(s.entity_size(k)) * Scalar(s.entity_width(k));
    if (!(cells > Scalar(0))) throw std::invalid_argument("sampling_condition_number: empty entity");
    const Scalar d = plan.quotas[k] / cells;
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  if (!(dmin > Scalar(0)))
    throw std::invalid_argument("sampling_condition_number: entity with zero quota");
  return Scalar(3) * Scalar(plan.total) * std::sqrt(dmax) / dmin;
}

// Raw sufficiency ratios for the recovery conditions, all constants taken as
// one. Values above one indicate the corresponding condition is met at that
// constant.
template <class Scalar>
struct SampleComplexityReport {
  std::vector<Scalar> per_entity_ratio;  // quota_k vs mu0 * n_k * R * beta * log N * log(N kappa)
  Scalar total_ratio = 0;                // total vs mu0 * N * R * beta * log N * log(N kappa)
  Scalar density_ratio_min = 0;          // per-entity density vs total/N^2
  Scalar density_ratio_max = 0;
  Scalar kappa = 0;
  Scalar mu0 = 0;
  Scalar beta = 0;
  Index rank = 0;
};

template <class Scalar>
SampleComplexityReport<Scalar> sample_complexity_report(const SamplingPlan<Scalar>& plan, Index rank,
                                                        Scalar mu0, Scalar beta) {
  validate_plan(plan);
  if (rank < 1) throw std::invalid_argument("sample_complexity_report: rank must be positive");
  if (!(mu0 > Scalar(0))) throw std::invalid_argument("sample_complexity_report: mu0 must be positive");
  if (!(beta > Scalar(0))) throw std::invalid_argument("sample_complexity_report: beta must be positive");
  const CollectiveSchema& s = *plan.schema;
  SampleComplexityReport<Scalar> rep;
  rep.kappa = sampling_condition_number(plan);
  rep.mu0 = mu0;
  rep.beta = beta;
  rep.rank = rank;
  const Scalar n_total = Scalar(s.total_size());
  const Scalar log_n = std::log(n_total);
  const Scalar log_nk = std::log(n_total * rep.kappa);
  rep.per_entity_ratio.resize(s.entity_count());
  rep.density_ratio_min = std::numeric_limits<Scalar>::infinity();
  rep.density_ratio_max = 0;
  const Scalar omega = Scalar(plan.total);
  for (int k = 0; k < s.entity_count(); ++k) {
    const Scalar need = mu0 * Scalar(s.entity_size(k)) * Scalar(rank) * beta * log_n * log_nk;
    rep.per_entity_ratio[k] = plan.quotas[k] / need;
    const Scalar density = plan.quotas[k] / (Scalar(s.entity_size(k)) * Scalar(s.entity_width(k)));
    const Scalar ratio = density / (omega / (n_total * n_total));
    rep.density_ratio_min = std::min(rep.density_ratio_min, ratio);
    rep.density_ratio_max = std::max(rep.density_ratio_max, ratio);
  }
  rep.total_ratio = omega / (mu0 * n_total * Scalar(rank) * beta * log_n * log_nk);
  return rep;
}

template <class Scalar>
struct TangentIdentityCheck {
  std::vector<Scalar> estimates;    // one operator-norm estimate per trial
  Scalar fraction_within_half = 0;  // share of trials at or below 1/2
};

// Operator-norm estimates of (P_T R_Omega P_T - P_T) over fresh draws.
// Power iteration on the self-adjoint composition; a couple of random
// restarts guard against an unlucky start direction.
template <class Scalar>
TangentIdentityCheck<Scalar> check_tangent_sampling_identity(const SamplingPlan<Scalar>& plan,
                                                             const TangentBasis<Scalar>& tb, int trials,
                                                             std::uint64_t seed, int power_iters = 50,
                                                             int restarts = 2) {
  validate_plan(plan);
  if (!tb.schema || !schema_equal(*plan.schema, *tb.schema))
    throw std::invalid_argument("check_tangent_sampling_identity: schema mismatch");
  if (trials < 1) throw std::invalid_argument("check_tangent_sampling_identity: trials must be positive");
  const CollectiveSchema& s = *plan.schema;

  TangentIdentityCheck<Scalar> out;
  out.estimates.reserve(trials);
  int within = 0;
  for (int trial = 0; trial < trials; ++trial) {
    SamplingPlan<Scalar> p = plan;
    p.seed = plan.seed + static_cast<std::uint64_t>(trial);
    const ObservationSet<Scalar> omega = sample(p);
    const auto op = [&](const CollectiveMatrix<Scalar>& x) {
      const CollectiveMatrix<Scalar> tx = project_tangent(x, tb);
      const CollectiveMatrix<Scalar> rx = to_dense(apply_r_omega(tx, omega, p));
      return project_tangent(rx, tb) - tx;
    };
    Scalar best = 0;
    for (int start = 0; start <= restarts; ++start) {
      Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(trial) << 8) + static_cast<std::uint64_t>(start)));
      CollectiveMatrix<Scalar> x = zeros_like<Scalar>(plan.schema);
      for (int v = 0; v < s.view_count(); ++v)
        for (Index i = 0; i < x.views[v].rows(); ++i)
          for (Index j = 0; j < x.views[v].cols(); ++j) x.views[v](i, j) = static_cast<Scalar>(rng.normal());
      Scalar nrm = frobenius_norm(x);
      if (!(nrm > Scalar(0))) continue;
      for (auto& m : x.views) m /= nrm;
      Scalar estimate = 0;
      for (int it = 0; it < power_iters; ++it) {
        CollectiveMatrix<Scalar> y = op(x);
        estimate = frobenius_norm(y);
        if (estimate <= Scalar(0)) break;
        for (auto& m : y.views) m /= estimate;
        x = std::move(y);
      }
      best = std::max(best, estimate);
    }
    out.estimates.push_back(best);
    if (best <= Scalar(0.5)) ++within;
  }
  out.fraction_within_half = Scalar(within) / Scalar(trials);
  return out;
}

}  // namespace xmc
