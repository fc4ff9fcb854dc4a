#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xmc/collective.hpp"
#include "xmc/lanczos.hpp"
#include "xmc/observation.hpp"
#include "xmc/rng.hpp"
#include "xmc/schema.hpp"

namespace xmc {

// Iterate of the trace-ball solver: Z = W diag(weights) W^T with unit
// columns, so trace(Z) equals the weight sum and stays within the ball.
template <class Scalar>
struct LowRankPSD {
  Index n = 0;
  DenseMatrix<Scalar> columns;   // n x m, unit columns
  DenseVector<Scalar> weights;   // m nonnegative entries

  Scalar trace() const { return weights.size() ? weights.sum() : Scalar(0); }

  Scalar entry(Index a, Index b) const {
    if (weights.size() == 0) return Scalar(0);
    return (columns.row(a).array() * columns.row(b).array() * weights.transpose().array()).sum();
  }
};

template <class Scalar>
struct SolverConfig {
  std::optional<Scalar> eta;      // trace budget; unset means sweep for it
  int max_iters = 500;
  Scalar target_gap = Scalar(1e-6);
  Scalar eig_floor = Scalar(1e-12);  // floor of the per-step eigen tolerance
  int eig_max_steps = 0;             // 0 = automatic
  std::uint64_t seed = 0;
  Scalar objective_floor = 0;        // stop early at or below; 0 disables
  bool baseline = false;             // route solve() to the proximal baseline
  Scalar gamma = 0;                  // baseline regularization level
  int svt_iters = 500;
};

enum class TerminationReason { GapTarget, MaxIters, ObjectiveFloor, ZeroOptimal };

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::GapTarget: return "gap_target";
    case TerminationReason::MaxIters: return "max_iters";
    case TerminationReason::ObjectiveFloor: return "objective_floor";
    case TerminationReason::ZeroOptimal: return "zero_optimal";
  }
  return "unknown";
}

template <class Scalar>
struct IterRow {
  int iter = 0;
  Scalar objective = 0;
  Scalar gap = 0;
  double elapsed_ms = 0;
};

template <class Scalar>
struct SweepEntry {
  Scalar eta = 0;
  Scalar residual = 0;
};

template <class Scalar>
struct SolverReport {
  CollectiveMatrix<Scalar> estimate;
  LowRankPSD<Scalar> state;  // final spectrahedron iterate (Frank-Wolfe only)
  std::vector<IterRow<Scalar>> trace;
  int iterations = 0;
  TerminationReason reason = TerminationReason::MaxIters;
  Scalar initial_objective = 0;
  Scalar final_objective = 0;
  Scalar final_gap = 0;
  Scalar eta = 0;
  int matvecs = 0;
  std::vector<SweepEntry<Scalar>> eta_sweep;
};

namespace detail {

// Observations grouped by distinct cell, plus a symmetric CSR pattern over
// the stacked layout whose values are rewritten every iteration.
template <class Scalar>
struct ObservedSystem {
  Index n = 0;
  Index total = 0;  // draw count with multiplicity
  std::vector<Index> pa, pb;      // distinct pairs, pa < pb
  std::vector<Scalar> ysum, mult;
  Scalar ysq = 0;

  std::vector<Index> outer, inner;
  std::vector<Index> slot_ab, slot_ba;
  mutable std::vector<Scalar> vals;

  void set_values(const std::vector<Scalar>& per_pair) const {
    for (std::size_t p = 0; p < per_pair.size(); ++p) {
      vals[slot_ab[p]] = per_pair[p];
      vals[slot_ba[p]] = per_pair[p];
    }
  }

  void matvec(const Eigen::Ref<const DenseVector<Scalar>>& x, DenseVector<Scalar>& y) const {
    y.setZero(n);
    for (Index r = 0; r < n; ++r) {
      Scalar acc = 0;
      for (Index s = outer[r]; s < outer[r + 1]; ++s) acc += vals[s] * x[inner[s]];
      y[r] = acc;
    }
  }
};

template <class Scalar>
ObservedSystem<Scalar> build_observed_system(const CollectiveSchema& schema,
                                             const ObservationSet<Scalar>& obs) {
  if (obs.indices.empty()) throw std::invalid_argument("solver: empty observation set");
  if (obs.values.size() != obs.indices.size())
    throw std::invalid_argument("solver: observations have no values; run observe() first");

  struct Rec {
    Index a, b;
    Scalar y;
  };
  std::vector<Rec> recs;
  recs.reserve(obs.indices.size());
  for (std::size_t s = 0; s < obs.indices.size(); ++s) {
    const GlobalPair g = schema.global_index(obs.indices[s]);
    recs.push_back({std::min(g.a, g.b), std::max(g.a, g.b), obs.values[s]});
  }
  std::sort(recs.begin(), recs.end(), [](const Rec& x, const Rec& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });

  ObservedSystem<Scalar> sys;
  sys.n = schema.total_size();
  sys.total = static_cast<Index>(recs.size());
  for (std::size_t s = 0; s < recs.size(); ++s) {
    sys.ysq += recs[s].y * recs[s].y;
    if (s == 0 || recs[s].a != recs[s - 1].a || recs[s].b != recs[s - 1].b) {
      sys.pa.push_back(recs[s].a);
      sys.pb.push_back(recs[s].b);
      sys.ysum.push_back(recs[s].y);
      sys.mult.push_back(Scalar(1));
    } else {
      sys.ysum.back() += recs[s].y;
      sys.mult.back() += Scalar(1);
    }
  }

  const std::size_t pairs = sys.pa.size();
  struct Dir {
    Index row, col;
    std::size_t pair;
    bool forward;
  };
  std::vector<Dir> dirs;
  dirs.reserve(2 * pairs);
  for (std::size_t p = 0; p < pairs; ++p) {
    dirs.push_back({sys.pa[p], sys.pb[p], p, true});
    dirs.push_back({sys.pb[p], sys.pa[p], p, false});
  }
  std::sort(dirs.begin(), dirs.end(), [](const Dir& x, const Dir& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  sys.outer.assign(sys.n + 1, 0);
  for (const Dir& d : dirs) ++sys.outer[d.row + 1];
  for (Index r = 0; r < sys.n; ++r) sys.outer[r + 1] += sys.outer[r];
  sys.inner.resize(dirs.size());
  sys.vals.assign(dirs.size(), Scalar(0));
  sys.slot_ab.resize(pairs);
  sys.slot_ba.resize(pairs);
  for (std::size_t s = 0; s < dirs.size(); ++s) {
    sys.inner[s] = dirs[s].col;
    if (dirs[s].forward)
      sys.slot_ab[dirs[s].pair] = static_cast<Index>(s);
    else
      sys.slot_ba[dirs[s].pair] = static_cast<Index>(s);
  }
  return sys;
}

}  // namespace detail

// Residual loss of a trace-ball iterate on the observed cells, evaluated
// from the low-rank form.
template <class Scalar>
Scalar loss(const LowRankPSD<Scalar>& state, const ObservationSet<Scalar>& obs, Scalar eta) {
  if (!obs.schema) throw std::invalid_argument("loss: missing schema");
  if (obs.values.size() != obs.indices.size())
    throw std::invalid_argument("loss: observations have no values");
  Scalar acc = 0;
  for (std::size_t s = 0; s < obs.indices.size(); ++s) {
    const GlobalPair g = obs.schema->global_index(obs.indices[s]);
    const Scalar r = obs.values[s] - eta * state.entry(g.a, g.b);
    acc += r * r;
  }
  return acc;
}

// Gradient of the rescaled loss as a sparse symmetric matrix over the
// stacked layout; both orientations of every observed cell carry the value.
template <class Scalar>
Eigen::SparseMatrix<Scalar> gradient(const LowRankPSD<Scalar>& state, const ObservationSet<Scalar>& obs,
                                     Scalar eta) {
  if (!obs.schema) throw std::invalid_argument("gradient: missing schema");
  const detail::ObservedSystem<Scalar> sys = detail::build_observed_system(*obs.schema, obs);
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(2 * sys.pa.size());
  for (std::size_t p = 0; p < sys.pa.size(); ++p) {
    const Scalar z = state.entry(sys.pa[p], sys.pb[p]);
    const Scalar g = -eta * (sys.ysum[p] - sys.mult[p] * eta * z);
    trips.emplace_back(static_cast<int>(sys.pa[p]), static_cast<int>(sys.pb[p]), g);
    trips.emplace_back(static_cast<int>(sys.pb[p]), static_cast<int>(sys.pa[p]), g);
  }
  Eigen::SparseMatrix<Scalar> g(sys.n, sys.n);
  g.setFromTriplets(trips.begin(), trips.end());
  return g;
}

namespace detail {

template <class Scalar>
struct FwState {
  Index n = 0;
  DenseMatrix<Scalar> columns;  // capacity x n, active prefix
  DenseVector<Scalar> weights;
  Index active = 0;

  void init(Index n_, Index capacity) {
    n = n_;
    columns.resize(n_, capacity);
    weights.resize(capacity);
    active = 0;
  }

  void append(const DenseVector<Scalar>& u, Scalar w) {
    columns.col(active) = u;
    weights[active] = w;
    ++active;
  }

  LowRankPSD<Scalar> snapshot() const {
    LowRankPSD<Scalar> s;
    s.n = n;
    s.columns = columns.leftCols(active);
    s.weights = weights.head(active);
    return s;
  }

  // Exact re-factorization: Z is preserved to roundoff, weights below 1e-14
  // are dropped.
  void recompress() {
    if (active == 0) return;
    DenseMatrix<Scalar> a = columns.leftCols(active);
    for (Index j = 0; j < active; ++j) a.col(j) *= std::sqrt(std::max(weights[j], Scalar(0)));
    const Index r = std::min<Index>(n, active);
    Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(a);
    DenseMatrix<Scalar> q = qr.householderQ() * DenseMatrix<Scalar>::Identity(n, r);
    DenseMatrix<Scalar> rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(rr * rr.transpose());
    Index kept = 0;
    for (Index j = 0; j < r; ++j)
      if (es.eigenvalues()(j) > Scalar(1e-14)) ++kept;
    DenseMatrix<Scalar> w_new(n, kept);
    DenseVector<Scalar> l_new(kept);
    Index out = 0;
    for (Index j = 0; j < r; ++j) {
      if (es.eigenvalues()(j) <= Scalar(1e-14)) continue;
      w_new.col(out) = q * es.eigenvectors().col(j);
      l_new[out] = es.eigenvalues()(j);
      ++out;
    }
    active = kept;
    columns.leftCols(kept) = w_new;
    weights.head(kept) = l_new;
  }
};

}  // namespace detail

// Trace-constrained completion by Frank-Wolfe over the unit spectrahedron:
// at each step the top eigenvector of the negated gradient gives the vertex,
// and the iterate moves by the open-loop step 2/(t+2) as a convex
// combination, so feasibility is preserved exactly. The eigenvector call at
// step t is solved to tolerance max(1/t^2, floor) * max(1, f(Z_1)).
template <class Scalar>
SolverReport<Scalar> solve_frank_wolfe(const ObservationSet<Scalar>& obs, SchemaPtr schema,
                                       const SolverConfig<Scalar>& config) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto ms = [&t0] { return std::chrono::duration<double, std::milli>(clock::now() - t0).count(); };

  if (!schema) throw std::invalid_argument("solve_frank_wolfe: null schema");
  require_bipartite(*schema);
  if (!obs.schema || !schema_equal(*schema, *obs.schema))
    throw std::invalid_argument("solve_frank_wolfe: observation schema mismatch");
  if (!config.eta || !(*config.eta > Scalar(0)))
    throw std::invalid_argument("solve_frank_wolfe: trace budget eta must be positive");
  if (config.max_iters < 1) throw std::invalid_argument("solve_frank_wolfe: max_iters must be >= 1");
  if (!(config.target_gap > Scalar(0)))
    throw std::invalid_argument("solve_frank_wolfe: target gap must be positive");

  const Scalar eta = *config.eta;
  const detail::ObservedSystem<Scalar> sys = detail::build_observed_system(*schema, obs);
  const std::size_t pairs = sys.pa.size();
  const Index n = sys.n;
  const int eig_steps = config.eig_max_steps > 0 ? config.eig_max_steps
                                                 : static_cast<int>(std::min<Index>(n, 128));

  SolverReport<Scalar> rep;
  rep.eta = eta;
  auto matvec = [&sys](const Eigen::Ref<const DenseVector<Scalar>>& x, DenseVector<Scalar>& y) {
    sys.matvec(x, y);
  };

  // Vertex against the gradient at zero; a nonpositive top value certifies
  // that the zero iterate already minimizes over the ball.
  std::vector<Scalar> ghat(pairs);
  Scalar g0max = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    ghat[p] = eta * sys.ysum[p];
    g0max = std::max(g0max, std::abs(ghat[p]));
  }
  sys.set_values(ghat);
  const Scalar tol0 = std::max(Scalar(1e-8) * std::max<Scalar>(Scalar(1), g0max), Scalar(1e-14));
  TopEigenResult<Scalar> eig = approx_top_eigvec<Scalar>(matvec, n, tol0, derive_seed(config.seed, 0),
                                                         eig_steps);
  rep.matvecs += eig.matvecs;
  if (eig.value <= Scalar(1e-13) * std::max<Scalar>(Scalar(1), g0max)) {
    rep.estimate = zeros_like<Scalar>(schema);
    rep.reason = TerminationReason::ZeroOptimal;
    rep.initial_objective = sys.ysq;
    rep.final_objective = sys.ysq;
    rep.final_gap = 0;
    return rep;
  }

  detail::FwState<Scalar> st;
  const Index cap = std::min<Index>(n, 512) + 64;
  st.init(n, cap);
  st.append(eig.vector, Scalar(1));
  DenseVector<Scalar> warm = eig.vector;

  std::vector<Scalar> z(pairs);
  for (std::size_t p = 0; p < pairs; ++p) z[p] = eig.vector[sys.pa[p]] * eig.vector[sys.pb[p]];

  auto objective = [&] {
    Scalar acc = sys.ysq;
    for (std::size_t p = 0; p < pairs; ++p)
      acc += eta * z[p] * (eta * sys.mult[p] * z[p] - Scalar(2) * sys.ysum[p]);
    return acc;
  };

  Scalar tol_scale = 1;
  for (int t = 1;; ++t) {
    const Scalar obj = objective();
    if (t == 1) {
      tol_scale = std::max<Scalar>(Scalar(1), obj);
      rep.initial_objective = obj;
    }
    for (std::size_t p = 0; p < pairs; ++p) ghat[p] = eta * (sys.ysum[p] - eta * sys.mult[p] * z[p]);
    sys.set_values(ghat);
    const Scalar tol_t =
        std::max(Scalar(1) / (Scalar(t) * Scalar(t)), config.eig_floor) * tol_scale;
    eig = approx_top_eigvec<Scalar>(matvec, n, tol_t, derive_seed(config.seed, 0x100 + t), eig_steps,
                                    &warm);
    rep.matvecs += eig.matvecs;
    warm = eig.vector;

    Scalar g_dot_z = 0;
    for (std::size_t p = 0; p < pairs; ++p) g_dot_z -= Scalar(2) * ghat[p] * z[p];
    const Scalar gap = g_dot_z + std::max<Scalar>(eig.value, Scalar(0));

    rep.trace.push_back({t, obj, gap, ms()});
    rep.iterations = t;
    rep.final_objective = obj;
    rep.final_gap = gap;
    if (gap <= config.target_gap) {
      rep.reason = TerminationReason::GapTarget;
      break;
    }
    if (config.objective_floor > Scalar(0) && obj <= config.objective_floor) {
      rep.reason = TerminationReason::ObjectiveFloor;
      break;
    }
    if (t >= config.max_iters) {
      rep.reason = TerminationReason::MaxIters;
      break;
    }

    const Scalar alpha = Scalar(2) / Scalar(t + 2);
    st.weights.head(st.active) *= (Scalar(1) - alpha);
    if (eig.value > Scalar(0)) {
      if (st.active == cap) st.recompress();
      st.append(eig.vector, alpha);
      for (std::size_t p = 0; p < pairs; ++p)
        z[p] = (Scalar(1) - alpha) * z[p] + alpha * eig.vector[sys.pa[p]] * eig.vector[sys.pb[p]];
    } else {
      // The ball's apex 0 is the best vertex; shrink toward it.
      for (std::size_t p = 0; p < pairs; ++p) z[p] *= (Scalar(1) - alpha);
    }
  }

  rep.state = st.snapshot();
  const LowRankPSD<Scalar>& state = rep.state;
  rep.estimate = zeros_like<Scalar>(schema);
  const CollectiveSchema& s = *schema;
  if (state.weights.size() > 0) {
    for (int v = 0; v < s.view_count(); ++v) {
      const ViewDecl& d = s.view(v);
      const auto rows = state.columns.middleRows(s.entity_offset(d.row_entity), s.view_rows(v));
      const auto cols = state.columns.middleRows(s.entity_offset(d.col_entity), s.view_cols(v));
      rep.estimate.views[v] = eta * (rows * state.weights.asDiagonal() * cols.transpose());
    }
  }
  return rep;
}

// Linearization gap of the rescaled loss at `state` over the unit
// spectrahedron.
template <class Scalar>
Scalar duality_gap(const LowRankPSD<Scalar>& state, const ObservationSet<Scalar>& obs, Scalar eta,
                   Scalar eig_tol = Scalar(-1), std::uint64_t seed = 0x6a9) {
  if (!obs.schema) throw std::invalid_argument("duality_gap: missing schema");
  const detail::ObservedSystem<Scalar> sys = detail::build_observed_system(*obs.schema, obs);
  if (state.n != sys.n) throw std::invalid_argument("duality_gap: state dimension mismatch");
  const std::size_t pairs = sys.pa.size();
  std::vector<Scalar> ghat(pairs);
  Scalar g_dot_z = 0;
  Scalar gmax = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Scalar z = state.entry(sys.pa[p], sys.pb[p]);
    ghat[p] = eta * (sys.ysum[p] - eta * sys.mult[p] * z);
    g_dot_z -= Scalar(2) * ghat[p] * z;
    gmax = std::max(gmax, std::abs(ghat[p]));
  }
  sys.set_values(ghat);
  if (eig_tol < Scalar(0)) eig_tol = Scalar(1e-10) * std::max<Scalar>(Scalar(1), gmax);
  auto matvec = [&sys](const Eigen::Ref<const DenseVector<Scalar>>& x, DenseVector<Scalar>& y) {
    sys.matvec(x, y);
  };
  const TopEigenResult<Scalar> eig = approx_top_eigvec<Scalar>(matvec, sys.n, eig_tol, seed);
  return g_dot_z + std::max<Scalar>(eig.value, Scalar(0));
}

// Proximal-gradient baseline on the stacked symmetric layout: gradient step
// on the squared loss, then eigenvalue soft-thresholding at gamma times the
// step. Full eigendecomposition per iteration, so it is guarded to small
// problems.
template <class Scalar>
SolverReport<Scalar> solve_svt(const ObservationSet<Scalar>& obs, SchemaPtr schema, Scalar gamma,
                               int iters) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto ms = [&t0] { return std::chrono::duration<double, std::milli>(clock::now() - t0).count(); };

  if (!schema) throw std::invalid_argument("solve_svt: null schema");
  require_bipartite(*schema);
  if (!obs.schema || !schema_equal(*schema, *obs.schema))
    throw std::invalid_argument("solve_svt: observation schema mismatch");
  if (!(gamma >= Scalar(0))) throw std::invalid_argument("solve_svt: gamma must be nonnegative");
  if (iters < 1) throw std::invalid_argument("solve_svt: iters must be >= 1");
  if (schema->total_size() > 2000)
    throw std::invalid_argument("solve_svt: stacked size above the dense-eigendecomposition guard (2000)");

  const detail::ObservedSystem<Scalar> sys = detail::build_observed_system(*schema, obs);
  const Index n = sys.n;
  Scalar max_mult = 1;
  for (Scalar m : sys.mult) max_mult = std::max(max_mult, m);
  const Scalar step = Scalar(1) / (Scalar(2) * max_mult);
  const Scalar tau = gamma * step;

  SolverReport<Scalar> rep;
  rep.eta = 0;
  DenseMatrix<Scalar> x = DenseMatrix<Scalar>::Zero(n, n);
  rep.initial_objective = sys.ysq;
  for (int it = 1; it <= iters; ++it) {
    DenseMatrix<Scalar> prev = x;
    for (std::size_t p = 0; p < sys.pa.size(); ++p) {
      const Scalar r = sys.ysum[p] - sys.mult[p] * x(sys.pa[p], sys.pb[p]);
      x(sys.pa[p], sys.pb[p]) += step * r;
      x(sys.pb[p], sys.pa[p]) = x(sys.pa[p], sys.pb[p]);
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(x);
    DenseVector<Scalar> lam = es.eigenvalues();
    Scalar spectral_l1 = 0;
    for (Index i = 0; i < n; ++i) {
      const Scalar soft = std::max(std::abs(lam[i]) - tau, Scalar(0));
      lam[i] = lam[i] >= Scalar(0) ? soft : -soft;
      spectral_l1 += std::abs(lam[i]);
    }
    x = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();

    Scalar fit = sys.ysq;
    for (std::size_t p = 0; p < sys.pa.size(); ++p) {
      const Scalar z = x(sys.pa[p], sys.pb[p]);
      fit += z * (sys.mult[p] * z - Scalar(2) * sys.ysum[p]);
    }
    const Scalar obj = fit + gamma * spectral_l1;
    const Scalar move = (x - prev).norm() / step;  // prox-gradient stationarity proxy
    rep.trace.push_back({it, obj, move, ms()});
    rep.iterations = it;
    rep.final_objective = obj;
    rep.final_gap = move;
  }
  rep.reason = TerminationReason::MaxIters;
  rep.estimate = zeros_like<Scalar>(schema);
  for (int v = 0; v < schema->view_count(); ++v) rep.estimate.views[v] = extract_view(x, *schema, v);
  return rep;
}

// Entry point: dispatches to the baseline when asked, runs Frank-Wolfe when
// a trace budget is given, and otherwise sweeps a geometric ladder of
// budgets until the training residual interpolates the observations.
template <class Scalar>
SolverReport<Scalar> solve(const ObservationSet<Scalar>& obs, SchemaPtr schema,
                           const SolverConfig<Scalar>& config) {
  if (config.baseline) return solve_svt(obs, schema, config.gamma, config.svt_iters);
  if (config.eta) return solve_frank_wolfe(obs, schema, config);

  if (obs.values.size() != obs.indices.size() || obs.indices.empty())
    throw std::invalid_argument("solve: observations have no values");
  Scalar ynorm2 = 0, yabs = 0;
  for (Scalar y : obs.values) {
    ynorm2 += y * y;
    yabs += std::abs(y);
  }
  if (ynorm2 == Scalar(0)) {
    SolverReport<Scalar> rep;
    rep.estimate = zeros_like<Scalar>(schema);
    rep.reason = TerminationReason::ZeroOptimal;
    return rep;
  }
  const Scalar ynorm = std::sqrt(ynorm2);
  const Scalar eta0 = yabs / std::sqrt(Scalar(obs.indices.size()));
  const Scalar tol = Scalar(1e-3) * ynorm;
  std::vector<SweepEntry<Scalar>> log;
  for (int i = 0; i < 20; ++i) {
    SolverConfig<Scalar> c = config;
    c.eta = eta0 * Scalar(1 << i);
    c.objective_floor = std::max(c.objective_floor, tol * tol / Scalar(4));
    SolverReport<Scalar> rep = solve_frank_wolfe(obs, schema, c);
    const Scalar resid = std::sqrt(std::max<Scalar>(rep.final_objective, Scalar(0)));
    log.push_back({*c.eta, resid});
    if (resid <= tol) {
      rep.eta_sweep = std::move(log);
      return rep;
    }
  }
  throw std::runtime_error("solve: trace sweep exhausted after 20 doublings without interpolating");
}

}  // namespace xmc
