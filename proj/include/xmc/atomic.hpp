#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "xmc/collective.hpp"
#include "xmc/lanczos.hpp"
#include "xmc/schema.hpp"

namespace xmc {

// Matvec of the stacked symmetric layout without materializing it:
// each view contributes its block and the transposed mirror.
template <class Scalar>
void block_matvec(const CollectiveMatrix<Scalar>& x, const Eigen::Ref<const DenseVector<Scalar>>& in,
                  DenseVector<Scalar>& out) {
  const CollectiveSchema& s = *x.schema;
  out.setZero(s.total_size());
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    const Index r0 = s.entity_offset(d.row_entity);
    const Index c0 = s.entity_offset(d.col_entity);
    out.segment(r0, s.view_rows(v)).noalias() += x.views[v] * in.segment(c0, s.view_cols(v));
    out.segment(c0, s.view_cols(v)).noalias() += x.views[v].transpose() * in.segment(r0, s.view_rows(v));
  }
}

template <class Scalar>
struct DualNormResult {
  Scalar value = 0;            // half the top eigenvalue of the stacked layout
  DenseVector<Scalar> vector;  // maximizing direction
  Scalar eig_residual = 0;
  bool converged = false;
};

// Gauge dual norm: half the largest eigenvalue of the stacked symmetric
// layout. Well-posed only over two-colorable schemas, where the stacked
// spectrum is sign-symmetric and the top eigenvalue equals the spectral norm.
template <class Scalar>
DualNormResult<Scalar> dual_atomic_norm_full(const CollectiveMatrix<Scalar>& x, Scalar tol = Scalar(-1),
                                             std::uint64_t seed = 0x5eed) {
  if (!x.schema) throw std::invalid_argument("dual_atomic_norm: missing schema");
  require_bipartite(*x.schema);
  const Index n = x.schema->total_size();
  const Scalar scale = frobenius_norm(x);
  if (scale == Scalar(0)) {
    DualNormResult<Scalar> r;
    r.vector = DenseVector<Scalar>::Zero(n);
    if (n > 0) r.vector[0] = Scalar(1);
    r.converged = true;
    return r;
  }
  if (tol < Scalar(0)) tol = Scalar(1e-10) * std::max<Scalar>(Scalar(1), scale);
  auto apply = [&x](const Eigen::Ref<const DenseVector<Scalar>>& in, DenseVector<Scalar>& out) {
    block_matvec(x, in, out);
  };
  const TopEigenResult<Scalar> eig = approx_top_eigvec<Scalar>(apply, n, tol, seed);
  DualNormResult<Scalar> r;
  r.value = eig.value / Scalar(2);
  r.vector = eig.vector;
  r.eig_residual = eig.residual;
  r.converged = eig.converged;
  return r;
}

template <class Scalar>
Scalar dual_atomic_norm(const CollectiveMatrix<Scalar>& x, Scalar tol = Scalar(-1),
                        std::uint64_t seed = 0x5eed) {
  return dual_atomic_norm_full(x, tol, seed).value;
}

template <class Scalar>
struct FactorSet;  // factors.hpp

template <class Scalar>
Scalar factor_trace(const FactorSet<Scalar>& f);

template <class Scalar>
CollectiveMatrix<Scalar> synthesize(const FactorSet<Scalar>& f);

template <class Scalar>
struct NormBounds {
  Scalar lower = 0;
  Scalar upper = 0;
};

// Sandwich on the gauge. Lower bound: best scaled dual-feasible certificate
// among X itself, the top-eigenvector atom, and any caller-supplied
// candidates. Upper bound: total factor energy when a consistent
// factorization is supplied, +inf otherwise.
template <class Scalar>
NormBounds<Scalar> atomic_norm_bounds(const CollectiveMatrix<Scalar>& x,
                                      const FactorSet<Scalar>* factors = nullptr,
                                      const std::vector<CollectiveMatrix<Scalar>>* candidates = nullptr) {
  if (!x.schema) throw std::invalid_argument("atomic_norm_bounds: missing schema");
  require_bipartite(*x.schema);
  NormBounds<Scalar> out;
  const Scalar xnorm = frobenius_norm(x);
  if (xnorm == Scalar(0)) {
    if (factors) {
      const Scalar drift = frobenius_norm(synthesize(*factors));
      if (drift > Scalar(1e-8)) throw std::invalid_argument("atomic_norm_bounds: factors do not synthesize X");
    }
    return out;  // the zero value has gauge exactly zero
  }

  out.upper = std::numeric_limits<Scalar>::infinity();
  if (factors) {
    const Scalar gap = frobenius_norm(synthesize(*factors) - x);
    if (gap > Scalar(1e-8) * std::max<Scalar>(Scalar(1), xnorm))
      throw std::invalid_argument("atomic_norm_bounds: factors do not synthesize X");
    out.upper = factor_trace(*factors);
  }

  const DualNormResult<Scalar> dual = dual_atomic_norm_full(x);
  std::vector<const CollectiveMatrix<Scalar>*> cands;
  cands.push_back(&x);
  CollectiveMatrix<Scalar> top_atom;
  if (dual.vector.size() == x.schema->total_size() && dual.vector.norm() > Scalar(0)) {
    DenseVector<Scalar> u = dual.vector.normalized();
    top_atom = atom(x.schema, u);
    cands.push_back(&top_atom);
  }
  if (candidates)
    for (const auto& c : *candidates) cands.push_back(&c);

  for (const CollectiveMatrix<Scalar>* y : cands) {
    if (frobenius_norm(*y) == Scalar(0)) continue;
    const Scalar yd = dual_atomic_norm(*y);
    if (!(yd > Scalar(0))) continue;
    out.lower = std::max(out.lower, inner(x, *y) / yd);
  }
  out.lower = std::max(out.lower, Scalar(0));
  return out;
}

}  // namespace xmc
