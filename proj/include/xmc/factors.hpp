#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "xmc/collective.hpp"
#include "xmc/rng.hpp"
#include "xmc/schema.hpp"

namespace xmc {

// Shared latent factors, one block per entity type, common width R.
template <class Scalar>
struct FactorSet {
  SchemaPtr schema;
  Index rank = 0;
  std::vector<DenseMatrix<Scalar>> factors;
};

template <class Scalar>
FactorSet<Scalar> make_factor_set(SchemaPtr schema, std::vector<DenseMatrix<Scalar>> factors) {
  if (!schema) throw std::invalid_argument("make_factor_set: null schema");
  if (static_cast<int>(factors.size()) != schema->entity_count())
    throw std::invalid_argument("make_factor_set: wrong factor count");
  Index rank = -1;
  for (int k = 0; k < schema->entity_count(); ++k) {
    if (factors[k].rows() != schema->entity_size(k))
      throw std::invalid_argument("make_factor_set: factor row count mismatch");
    if (rank < 0) rank = factors[k].cols();
    if (factors[k].cols() != rank)
      throw std::invalid_argument("make_factor_set: factors must share one width");
  }
  if (rank < 1) throw std::invalid_argument("make_factor_set: rank must be at least 1");
  return {std::move(schema), rank, std::move(factors)};
}

template <class Scalar>
CollectiveMatrix<Scalar> synthesize(const FactorSet<Scalar>& f) {
  const CollectiveSchema& s = *f.schema;
  CollectiveMatrix<Scalar> x;
  x.schema = f.schema;
  x.views.reserve(s.view_count());
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    x.views.push_back(f.factors[d.row_entity] * f.factors[d.col_entity].transpose());
  }
  return x;
}

template <class Scalar>
Scalar factor_trace(const FactorSet<Scalar>& f) {
  Scalar acc = 0;
  for (const auto& u : f.factors) acc += u.squaredNorm();
  return acc;
}

// Gauge-rebalances the factors without changing any view: entities on one
// side of the bipartition absorb B^{1/2}, the other side B^{-1/2}, with B the
// geometric mean solving B P B = Q for the two class Grams P and Q. This
// minimizes factor_trace over the orbit, so the result certifies the tightest
// trace budget this factorization can witness; afterwards both class Grams
// are equal. Rank-deficient Grams are left untouched.
template <class Scalar>
FactorSet<Scalar> balance_factor_set(const FactorSet<Scalar>& f) {
  const ValidationReport rep = validate(*f.schema);
  if (!rep.ok) throw std::invalid_argument("balance_factor_set: schema must be bipartite");

  const int r = f.rank;
  DenseMatrix<Scalar> gram[2] = {DenseMatrix<Scalar>::Zero(r, r), DenseMatrix<Scalar>::Zero(r, r)};
  for (int k = 0; k < f.schema->entity_count(); ++k)
    gram[rep.coloring[k]] += f.factors[k].transpose() * f.factors[k];

  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> ep(gram[0]);
  const Scalar pmax = ep.eigenvalues().maxCoeff();
  if (!(pmax > Scalar(0)) || ep.eigenvalues().minCoeff() < Scalar(1e-12) * pmax) return f;
  const DenseMatrix<Scalar> p_half =
      ep.eigenvectors() * ep.eigenvalues().cwiseSqrt().asDiagonal() * ep.eigenvectors().transpose();
  const DenseMatrix<Scalar> p_inv_half = ep.eigenvectors() *
                                         ep.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                         ep.eigenvectors().transpose();

  const DenseMatrix<Scalar> mid = p_half * gram[1] * p_half;
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> em(mid);
  const Scalar mmax = em.eigenvalues().maxCoeff();
  if (!(mmax > Scalar(0)) || em.eigenvalues().minCoeff() < Scalar(1e-12) * mmax) return f;
  const DenseMatrix<Scalar> mid_half =
      em.eigenvectors() * em.eigenvalues().cwiseSqrt().asDiagonal() * em.eigenvectors().transpose();
  const DenseMatrix<Scalar> b = p_inv_half * mid_half * p_inv_half;

  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eb(b);
  const DenseMatrix<Scalar> scale[2] = {
      eb.eigenvectors() * eb.eigenvalues().cwiseSqrt().asDiagonal() * eb.eigenvectors().transpose(),
      eb.eigenvectors() * eb.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          eb.eigenvectors().transpose()};

  FactorSet<Scalar> out = f;
  for (int k = 0; k < f.schema->entity_count(); ++k)
    out.factors[k] = f.factors[k] * scale[rep.coloring[k]];
  return out;
}

// Orthonormal bases of the per-entity factor column spans.
template <class Scalar>
struct TangentBasis {
  SchemaPtr schema;
  Index nominal_rank = 0;  // width of the factor set the basis came from
  std::vector<DenseMatrix<Scalar>> bases;
};

// Rank-revealing orthonormalization; directions with singular value at or
// below 1e-10 * ||U_k||_2 are dropped. A zero factor block yields an empty
// basis for that entity.
template <class Scalar>
TangentBasis<Scalar> tangent_basis(const FactorSet<Scalar>& f) {
  TangentBasis<Scalar> tb;
  tb.schema = f.schema;
  tb.nominal_rank = f.rank;
  tb.bases.reserve(f.factors.size());
  for (const auto& u : f.factors) {
    Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(u, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const Scalar cut = (sv.size() > 0 ? sv(0) : Scalar(0)) * Scalar(1e-10);
    Index r = 0;
    while (r < sv.size() && sv(r) > cut && sv(r) > Scalar(0)) ++r;
    tb.bases.push_back(svd.matrixU().leftCols(r));
  }
  return tb;
}

template <class Scalar>
void require_tangent_schema(const TangentBasis<Scalar>& tb, const CollectiveMatrix<Scalar>& x) {
  if (!tb.schema || !x.schema || !schema_equal(*tb.schema, *x.schema))
    throw std::invalid_argument("tangent basis and value built over different schemas");
}

// Complement projection: per view, multiply by the orthogonal complements of
// the row-entity and column-entity spans on both sides.
template <class Scalar>
CollectiveMatrix<Scalar> project_tangent_complement(const CollectiveMatrix<Scalar>& x,
                                                    const TangentBasis<Scalar>& tb) {
  require_tangent_schema(tb, x);
  const CollectiveSchema& s = *x.schema;
  CollectiveMatrix<Scalar> out;
  out.schema = x.schema;
  out.views.reserve(s.view_count());
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    const DenseMatrix<Scalar>& qr = tb.bases[d.row_entity];
    const DenseMatrix<Scalar>& qc = tb.bases[d.col_entity];
    const DenseMatrix<Scalar>& m = x.views[v];
    // (I - Qr Qr^T) M (I - Qc Qc^T), kept in low-rank pieces.
    const DenseMatrix<Scalar> a = qr.transpose() * m;        // r_r x n_c
    const DenseMatrix<Scalar> b = m * qc;                    // n_r x r_c
    const DenseMatrix<Scalar> c = a * qc;                    // r_r x r_c
    DenseMatrix<Scalar> y = m;
    y.noalias() -= qr * a;
    y.noalias() -= b * qc.transpose();
    y.noalias() += qr * (c * qc.transpose());
    out.views.push_back(std::move(y));
  }
  return out;
}

template <class Scalar>
CollectiveMatrix<Scalar> project_tangent(const CollectiveMatrix<Scalar>& x, const TangentBasis<Scalar>& tb) {
  return x - project_tangent_complement(x, tb);
}

// ||P_T(e_i e_j^T)||_F^2 in closed form from the two leverage scores.
template <class Scalar>
Scalar tangent_cell_energy(const TangentBasis<Scalar>& tb, const BasisIndex& idx) {
  const CollectiveSchema& s = *tb.schema;
  if (!s.contains(idx)) throw std::out_of_range("tangent_cell_energy: cell out of range");
  const ViewDecl& d = s.view(idx.view);
  const Scalar a = tb.bases[d.row_entity].row(idx.i).squaredNorm();
  const Scalar b = tb.bases[d.col_entity].row(idx.j).squaredNorm();
  return a + b - a * b;
}

// Worst-case ratio of the tangent energy of a cell indicator to its
// width-scaled budget R/m_row + R/m_col. The cell energy a + b - a b is
// monotone in both leverage scores, so the per-view maximum is attained at
// the per-entity maximal leverages and the scan over cells is exact at any
// size.
template <class Scalar>
Scalar incoherence(const TangentBasis<Scalar>& tb) {
  const CollectiveSchema& s = *tb.schema;
  if (tb.nominal_rank < 1) throw std::invalid_argument("incoherence: nominal rank must be positive");
  std::vector<Scalar> max_lev(s.entity_count(), Scalar(0));
  for (int k = 0; k < s.entity_count(); ++k) {
    const DenseMatrix<Scalar>& q = tb.bases[k];
    for (Index i = 0; i < q.rows(); ++i) max_lev[k] = std::max(max_lev[k], Scalar(q.row(i).squaredNorm()));
  }
  const Scalar r = Scalar(tb.nominal_rank);
  Scalar mu = 0;
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    if (s.entity_width(d.row_entity) == 0 || s.entity_width(d.col_entity) == 0)
      throw std::invalid_argument("incoherence: entity with empty concatenation");
    const Scalar a = max_lev[d.row_entity];
    const Scalar b = max_lev[d.col_entity];
    const Scalar budget = r / Scalar(s.entity_width(d.row_entity)) + r / Scalar(s.entity_width(d.col_entity));
    mu = std::max(mu, (a + b - a * b) / budget);
  }
  return mu;
}

// Gaussian factor set; each entity block gets its own derived stream so the
// result is independent of traversal order.
template <class Scalar>
FactorSet<Scalar> random_factor_set(SchemaPtr schema, Index rank, std::uint64_t seed) {
  if (!schema) throw std::invalid_argument("random_factor_set: null schema");
  if (rank < 1) throw std::invalid_argument("random_factor_set: rank must be at least 1");
  std::vector<DenseMatrix<Scalar>> factors;
  factors.reserve(schema->entity_count());
  for (int k = 0; k < schema->entity_count(); ++k) {
    Rng rng(derive_seed(seed, 0xfac0 + static_cast<std::uint64_t>(k)));
    DenseMatrix<Scalar> u(schema->entity_size(k), rank);
    for (Index i = 0; i < u.rows(); ++i)
      for (Index j = 0; j < u.cols(); ++j) u(i, j) = static_cast<Scalar>(rng.normal());
    factors.push_back(std::move(u));
  }
  return make_factor_set(std::move(schema), std::move(factors));
}

}  // namespace xmc
