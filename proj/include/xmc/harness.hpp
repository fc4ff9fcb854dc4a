#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "xmc/collective.hpp"
#include "xmc/factors.hpp"
#include "xmc/observation.hpp"
#include "xmc/rng.hpp"
#include "xmc/schema.hpp"
#include "xmc/solver.hpp"

namespace xmc {

// Benchmark family: four entity types of equal size n, three views forming
// the chain (0,1), (0,2), (1,3). Bipartite with classes {0,3} and {1,2};
// concatenation widths are (2n, 2n, n, n).
inline SchemaPtr four_entity_chain(Index n) {
  if (n < 1) throw std::invalid_argument("four_entity_chain: n must be >= 1");
  return std::make_shared<CollectiveSchema>(
      std::vector<Index>{n, n, n, n},
      std::vector<ViewDecl>{{0, 1}, {0, 2}, {1, 3}},
      std::vector<std::string>{"e1", "e2", "e3", "e4"});
}

// The "2 log n" rank rule, natural log.
inline int default_rank_rule(Index n) {
  return std::max(1, static_cast<int>(std::lround(2.0 * std::log(static_cast<double>(n)))));
}

template <class Scalar = double>
struct SyntheticInstance {
  FactorSet<Scalar> factors;
  CollectiveMatrix<Scalar> truth;
};

// Ground truth with i.i.d. standard normal factor entries.
template <class Scalar = double>
SyntheticInstance<Scalar> generate_synthetic(SchemaPtr schema, int rank, std::uint64_t seed) {
  if (!schema) throw std::invalid_argument("generate_synthetic: null schema");
  require_bipartite(*schema);
  // Balanced factors make factor_trace the tightest trace budget the
  // instance can witness, which recovery runs rely on.
  SyntheticInstance<Scalar> inst{balance_factor_set(random_factor_set<Scalar>(schema, rank, seed)),
                                 {}};
  inst.truth = synthesize(inst.factors);
  return inst;
}

enum class RmseMask { All, Heldout };

template <class Scalar>
struct RmseResult {
  Scalar absolute = 0;
  Scalar relative = 0;
  Index cells = 0;
};

// Root-mean-square error over a cell selection, absolute and relative to
// the truth's RMS on the same cells. Heldout means cells never drawn.
template <class Scalar>
RmseResult<Scalar> rmse(const CollectiveMatrix<Scalar>& estimate, const CollectiveMatrix<Scalar>& truth,
                        RmseMask mask = RmseMask::All, const ObservationSet<Scalar>* omega = nullptr) {
  require_same_schema(estimate, truth);
  const CollectiveSchema& s = *truth.schema;
  std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> observed;
  if (mask == RmseMask::Heldout) {
    if (!omega || !omega->schema || !schema_equal(s, *omega->schema))
      throw std::invalid_argument("rmse: heldout mask needs observations on the same schema");
    for (int v = 0; v < s.view_count(); ++v)
      observed.emplace_back(
          Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(s.view_rows(v), s.view_cols(v), false));
    for (const BasisIndex& idx : omega->indices) observed[idx.view](idx.i, idx.j) = true;
  }
  Scalar diff2 = 0, truth2 = 0;
  Index cells = 0;
  for (int v = 0; v < s.view_count(); ++v) {
    for (Index i = 0; i < s.view_rows(v); ++i) {
      for (Index j = 0; j < s.view_cols(v); ++j) {
        if (mask == RmseMask::Heldout && observed[v](i, j)) continue;
        const Scalar d = estimate.views[v](i, j) - truth.views[v](i, j);
        diff2 += d * d;
        truth2 += truth.views[v](i, j) * truth.views[v](i, j);
        ++cells;
      }
    }
  }
  if (cells == 0) throw std::invalid_argument("rmse: empty cell selection");
  RmseResult<Scalar> r;
  r.cells = cells;
  r.absolute = std::sqrt(diff2 / Scalar(cells));
  const Scalar truth_rms = std::sqrt(truth2 / Scalar(cells));
  r.relative = truth_rms > Scalar(0) ? r.absolute / truth_rms
                                     : (r.absolute > Scalar(0) ? std::numeric_limits<Scalar>::infinity()
                                                               : Scalar(0));
  return r;
}

template <class Scalar = double>
struct ExperimentConfig {
  std::vector<Index> sizes = {50, 100};
  int rank = 0;  // 0 applies the 2*ln(n) rule per size
  std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  QuotaPreset preset = QuotaPreset::Proportional;
  Scalar noise_sigma = 0;
  int repetitions = 5;
  std::uint64_t seed = 1;
  SolverConfig<Scalar> solver;
  // Early-exit level for the noise-free fit, as a fraction of ||y||.
  Scalar train_floor_rel = Scalar(5e-3);
};

template <class Scalar = double>
struct SweepRow {
  Index n = 0;
  int rank = 0;
  Index omega = 0;
  double fraction = 0;    // draws / total cell count
  double normalized = 0;  // min_k quota_k / (n_k * R * ln N)
  Scalar rmse_full_rel = 0;
  Scalar rmse_heldout_rel = 0;
  Scalar rmse_full_abs = 0;
  Scalar rmse_heldout_abs = 0;
  int iterations = 0;
  Scalar gap = 0;
  std::uint64_t seed = 0;  // per-cell derived solver seed
  int repetition = 0;
};

template <class Scalar>
double normalized_sample_size(const SamplingPlan<Scalar>& plan, int rank) {
  const CollectiveSchema& s = *plan.schema;
  const double logn = std::log(static_cast<double>(s.total_size()));
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.entity_count(); ++k)
    m = std::min(m, static_cast<double>(plan.quotas[k]) /
                        (static_cast<double>(s.entity_size(k)) * rank * logn));
  return m;
}

namespace detail {

inline std::uint64_t sweep_stream(std::uint64_t tag, Index n, std::size_t fraction_index, int rep) {
  return (tag << 56) ^ (static_cast<std::uint64_t>(n) << 32) ^
         (static_cast<std::uint64_t>(fraction_index) << 16) ^ static_cast<std::uint64_t>(rep);
}

}  // namespace detail

// Full synthetic protocol: for each (n, fraction, repetition) generate a
// truth, plan quotas, sample, observe, solve, and score. Rows are
// deterministic functions of the config and come out sorted by
// (n, fraction, repetition).
template <class Scalar = double>
std::vector<SweepRow<Scalar>> run_sweep(const ExperimentConfig<Scalar>& config) {
  if (config.repetitions < 1) throw std::invalid_argument("run_sweep: repetitions must be >= 1");
  if (config.fractions.empty()) throw std::invalid_argument("run_sweep: empty fraction grid");
  for (double f : config.fractions)
    if (!(f > 0.0) || f > 1.0) throw std::invalid_argument("run_sweep: fractions must lie in (0,1]");
  std::vector<Index> sizes = config.sizes;
  std::sort(sizes.begin(), sizes.end());

  std::vector<SweepRow<Scalar>> rows;
  for (Index n : sizes) {
    SchemaPtr schema = four_entity_chain(n);
    const int rank = config.rank > 0 ? config.rank : default_rank_rule(n);
    const Index cell_total = schema->cell_count();
    for (int rep = 0; rep < config.repetitions; ++rep) {
      const SyntheticInstance<Scalar> inst = generate_synthetic<Scalar>(
          schema, rank, derive_seed(config.seed, detail::sweep_stream(0x71, n, 0, rep)));
      for (std::size_t fi = 0; fi < config.fractions.size(); ++fi) {
        const double phi = config.fractions[fi];
        const Index total = std::max<Index>(1, std::llround(phi * static_cast<double>(cell_total)));
        SamplingPlan<Scalar> plan =
            make_plan<Scalar>(schema, total, config.preset,
                              derive_seed(config.seed, detail::sweep_stream(0x72, n, fi, rep)));
        const ObservationSet<Scalar> drawn = sample(plan);
        NoiseSpec noise;
        if (config.noise_sigma > Scalar(0)) {
          noise.kind = NoiseSpec::Kind::Gaussian;
          noise.sigma = static_cast<double>(config.noise_sigma);
        }
        ObservationSet<Scalar> obs =
            observe(inst.truth, drawn, noise,
                    derive_seed(config.seed, detail::sweep_stream(0x73, n, fi, rep)));
        obs.plan = plan;

        SolverConfig<Scalar> sc = config.solver;
        sc.seed = derive_seed(config.seed, detail::sweep_stream(0x74, n, fi, rep));
        if (config.noise_sigma == Scalar(0)) {
          // Noise-free runs pin the trace budget to the balanced witness: at
          // the data's own norm the interpolant is unique in the recovery
          // regime, while an inflated budget admits spurious interpolants and
          // stalls the error well above zero.
          sc.eta = factor_trace(inst.factors);
          Scalar y2 = 0;
          for (Scalar y : obs.values) y2 += y * y;
          sc.objective_floor = std::max(
              sc.objective_floor, config.train_floor_rel * config.train_floor_rel * y2);
        }
        const SolverReport<Scalar> sol = solve(obs, schema, sc);

        const RmseResult<Scalar> full = rmse(sol.estimate, inst.truth, RmseMask::All);
        const RmseResult<Scalar> held = rmse(sol.estimate, inst.truth, RmseMask::Heldout, &obs);
        SweepRow<Scalar> row;
        row.n = n;
        row.rank = rank;
        row.omega = total;
        row.fraction = static_cast<double>(total) / static_cast<double>(cell_total);
        row.normalized = normalized_sample_size(plan, rank);
        row.rmse_full_rel = full.relative;
        row.rmse_heldout_rel = held.relative;
        row.rmse_full_abs = full.absolute;
        row.rmse_heldout_abs = held.absolute;
        row.iterations = sol.iterations;
        row.gap = sol.final_gap;
        row.seed = sc.seed;
        row.repetition = rep;
        rows.push_back(row);
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow<Scalar>& a, const SweepRow<Scalar>& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.fraction != b.fraction) return a.fraction < b.fraction;
    return a.repetition < b.repetition;
  });
  return rows;
}

template <class Scalar>
std::string sweep_to_csv(const std::vector<SweepRow<Scalar>>& rows) {
  auto g17 = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::string out =
      "n,rank,omega,fraction,normalized,rmse_full_rel,rmse_heldout_rel,rmse_full_abs,"
      "rmse_heldout_abs,iterations,gap,seed,repetition\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.rank) + "," + std::to_string(r.omega) + "," +
           g17(r.fraction) + "," + g17(r.normalized) + "," + g17(static_cast<double>(r.rmse_full_rel)) +
           "," + g17(static_cast<double>(r.rmse_heldout_rel)) + "," +
           g17(static_cast<double>(r.rmse_full_abs)) + "," +
           g17(static_cast<double>(r.rmse_heldout_abs)) + "," + std::to_string(r.iterations) + "," +
           g17(static_cast<double>(r.gap)) + "," + std::to_string(r.seed) + "," +
           std::to_string(r.repetition) + "\n";
  }
  return out;
}

template <class Scalar>
struct DiagReport {
  std::string text;
  std::string csv;
  Scalar mu0 = 0;
  Scalar kappa = 0;
  bool degenerate_tangent = false;
  SampleComplexityReport<Scalar> complexity;
  TangentIdentityCheck<Scalar> tangent;
};

// Diagnostics bundle: incoherence, sampling conditioning, the recovery
// condition ratios (constants taken as 1), and the empirical
// tangent-sampling identity check.
template <class Scalar>
DiagReport<Scalar> diag_report(const SamplingPlan<Scalar>& plan, const FactorSet<Scalar>& factors,
                               Scalar beta = Scalar(2), int trials = 20,
                               std::uint64_t seed = 0xd1a6) {
  if (!plan.schema) throw std::invalid_argument("diag_report: null schema");
  require_bipartite(*plan.schema);
  validate_plan(plan);
  if (!factors.schema || !schema_equal(*plan.schema, *factors.schema))
    throw std::invalid_argument("diag_report: factor schema mismatch");

  DiagReport<Scalar> rep;
  const TangentBasis<Scalar> tb = tangent_basis(factors);
  bool any = false;
  for (const auto& q : tb.bases)
    if (q.cols() > 0) any = true;
  rep.degenerate_tangent = !any;
  rep.mu0 = incoherence(tb);
  rep.kappa = sampling_condition_number(plan);
  if (!rep.degenerate_tangent) {
    rep.complexity = sample_complexity_report(plan, factors.rank, rep.mu0, beta);
    rep.tangent = check_tangent_sampling_identity(plan, tb, trials, seed);
  }

  auto g = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  const CollectiveSchema& s = *plan.schema;
  std::string text;
  std::string csv = "key,value\n";
  auto put = [&](const std::string& key, double value) {
    text += "  " + key + " = " + g(value) + "\n";
    csv += key + "," + g(value) + "\n";
  };
  text += "diagnostics (entities=" + std::to_string(s.entity_count()) +
          ", views=" + std::to_string(s.view_count()) + ", N=" + std::to_string(s.total_size()) +
          ", draws=" + std::to_string(plan.total) + ", rank=" + std::to_string(factors.rank) +
          ", beta=" + g(static_cast<double>(beta)) + ")\n";
  put("incoherence_mu0", static_cast<double>(rep.mu0));
  put("kappa_omega", static_cast<double>(rep.kappa));
  if (rep.degenerate_tangent) {
    text += "  tangent space is degenerate (all-zero projections); condition ratios skipped\n";
    csv += "degenerate_tangent,1\n";
    rep.text = std::move(text);
    rep.csv = std::move(csv);
    return rep;
  }
  for (int k = 0; k < s.entity_count(); ++k)
    put("per_entity_ratio_" + entity_label(s, k), static_cast<double>(rep.complexity.per_entity_ratio[k]));
  put("total_ratio", static_cast<double>(rep.complexity.total_ratio));
  put("density_ratio_min", static_cast<double>(rep.complexity.density_ratio_min));
  put("density_ratio_max", static_cast<double>(rep.complexity.density_ratio_max));
  put("tangent_trials", trials);
  put("tangent_fraction_within_half", static_cast<double>(rep.tangent.fraction_within_half));
  rep.text = std::move(text);
  rep.csv = std::move(csv);
  return rep;
}

}  // namespace xmc
