#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "xmc/schema.hpp"
#include "xmc/types.hpp"

namespace xmc {

// Dense list-of-views value. Cheap to copy at desk scale; the schema is
// shared and outlives every value built from it.
template <class Scalar>
struct CollectiveMatrix {
  SchemaPtr schema;
  std::vector<DenseMatrix<Scalar>> views;
};

template <class Scalar>
struct SparseEntry {
  BasisIndex index;
  Scalar value;
};

// Coordinate list; repeated indices accumulate (multiplicity is meaningful).
template <class Scalar>
struct SparseCollective {
  SchemaPtr schema;
  std::vector<SparseEntry<Scalar>> entries;
};

inline bool schema_equal(const CollectiveSchema& a, const CollectiveSchema& b) {
  if (&a == &b) return true;
  if (a.entity_sizes() != b.entity_sizes()) return false;
  if (a.view_count() != b.view_count()) return false;
  for (int v = 0; v < a.view_count(); ++v)
    if (a.view(v).row_entity != b.view(v).row_entity || a.view(v).col_entity != b.view(v).col_entity)
      return false;
  return true;
}

template <class Scalar>
CollectiveMatrix<Scalar> zeros_like(SchemaPtr schema) {
  if (!schema) throw std::invalid_argument("zeros_like: null schema");
  CollectiveMatrix<Scalar> x;
  x.schema = schema;
  x.views.reserve(schema->view_count());
  for (int v = 0; v < schema->view_count(); ++v)
    x.views.push_back(DenseMatrix<Scalar>::Zero(schema->view_rows(v), schema->view_cols(v)));
  return x;
}

template <class Scalar>
CollectiveMatrix<Scalar> make_collective(SchemaPtr schema, std::vector<DenseMatrix<Scalar>> views) {
  if (!schema) throw std::invalid_argument("make_collective: null schema");
  if (static_cast<int>(views.size()) != schema->view_count())
    throw std::invalid_argument("make_collective: wrong view count");
  for (int v = 0; v < schema->view_count(); ++v)
    if (views[v].rows() != schema->view_rows(v) || views[v].cols() != schema->view_cols(v))
      throw std::invalid_argument("make_collective: view shape mismatch");
  return {std::move(schema), std::move(views)};
}

template <class Scalar>
void require_same_schema(const CollectiveMatrix<Scalar>& x, const CollectiveMatrix<Scalar>& y) {
  if (!x.schema || !y.schema || !schema_equal(*x.schema, *y.schema))
    throw std::invalid_argument("collective values built over different schemas");
}

template <class Scalar>
Scalar inner(const CollectiveMatrix<Scalar>& x, const CollectiveMatrix<Scalar>& y) {
  require_same_schema(x, y);
  Scalar acc = 0;
  for (std::size_t v = 0; v < x.views.size(); ++v)
    acc += (x.views[v].array() * y.views[v].array()).sum();
  return acc;
}

template <class Scalar>
Scalar inner(const CollectiveMatrix<Scalar>& x, const SparseCollective<Scalar>& y) {
  if (!y.schema || !x.schema || !schema_equal(*x.schema, *y.schema))
    throw std::invalid_argument("collective values built over different schemas");
  Scalar acc = 0;
  for (const SparseEntry<Scalar>& e : y.entries) acc += x.views[e.index.view](e.index.i, e.index.j) * e.value;
  return acc;
}

template <class Scalar>
Scalar inner(const SparseCollective<Scalar>& x, const CollectiveMatrix<Scalar>& y) {
  return inner(y, x);
}

template <class Scalar>
Scalar squared_norm(const CollectiveMatrix<Scalar>& x) {
  Scalar acc = 0;
  for (const auto& m : x.views) acc += m.squaredNorm();
  return acc;
}

template <class Scalar>
Scalar frobenius_norm(const CollectiveMatrix<Scalar>& x) {
  using std::sqrt;
  return sqrt(squared_norm(x));
}

template <class Scalar>
SparseCollective<Scalar> basis_element(SchemaPtr schema, const BasisIndex& idx) {
  if (!schema) throw std::invalid_argument("basis_element: null schema");
  if (!schema->contains(idx)) throw std::out_of_range("basis_element: cell out of range");
  return {std::move(schema), {{idx, Scalar(1)}}};
}

template <class Scalar>
CollectiveMatrix<Scalar> to_dense(const SparseCollective<Scalar>& s) {
  CollectiveMatrix<Scalar> x = zeros_like<Scalar>(s.schema);
  for (const SparseEntry<Scalar>& e : s.entries) x.views[e.index.view](e.index.i, e.index.j) += e.value;
  return x;
}

// In-place x += c * s, accumulating repeated coordinates.
template <class Scalar>
void add_scaled(CollectiveMatrix<Scalar>& x, const SparseCollective<Scalar>& s, Scalar c) {
  if (!x.schema || !s.schema || !schema_equal(*x.schema, *s.schema))
    throw std::invalid_argument("collective values built over different schemas");
  for (const SparseEntry<Scalar>& e : s.entries) x.views[e.index.view](e.index.i, e.index.j) += c * e.value;
}

// Stacked symmetric layout: each view lands in its off-diagonal block pair,
// everything else is zero.
template <class Scalar>
DenseMatrix<Scalar> to_block(const CollectiveMatrix<Scalar>& x) {
  const CollectiveSchema& s = *x.schema;
  DenseMatrix<Scalar> z = DenseMatrix<Scalar>::Zero(s.total_size(), s.total_size());
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    const Index r0 = s.entity_offset(d.row_entity);
    const Index c0 = s.entity_offset(d.col_entity);
    z.block(r0, c0, s.view_rows(v), s.view_cols(v)) = x.views[v];
    z.block(c0, r0, s.view_cols(v), s.view_rows(v)) = x.views[v].transpose();
  }
  return z;
}

template <class Scalar>
DenseMatrix<Scalar> extract_view(const DenseMatrix<Scalar>& z, const CollectiveSchema& s, int v) {
  if (z.rows() != s.total_size() || z.cols() != s.total_size())
    throw std::invalid_argument("extract_view: block matrix size mismatch");
  const ViewDecl& d = s.view(v);
  return z.block(s.entity_offset(d.row_entity), s.entity_offset(d.col_entity), s.view_rows(v),
                 s.view_cols(v));
}

// Concatenation of the views incident to entity k, transposing the ones that
// index k by column. Column order matches CollectiveSchema::entity_column.
template <class Scalar>
DenseMatrix<Scalar> to_entity_set(const CollectiveMatrix<Scalar>& x, int k) {
  const CollectiveSchema& s = *x.schema;
  DenseMatrix<Scalar> m(s.entity_size(k), s.entity_width(k));
  for (const auto& b : s.entity_blocks(k)) {
    if (!b.transposed)
      m.middleCols(b.col_offset, b.width) = x.views[b.view];
    else
      m.middleCols(b.col_offset, b.width) = x.views[b.view].transpose();
  }
  return m;
}

// Rank-one generator: view v picks up its block of u u^T. Requires unit u.
template <class Scalar>
CollectiveMatrix<Scalar> atom(SchemaPtr schema, const DenseVector<Scalar>& u) {
  if (!schema) throw std::invalid_argument("atom: null schema");
  const CollectiveSchema& s = *schema;
  if (u.size() != s.total_size()) throw std::invalid_argument("atom: direction has wrong length");
  using std::abs;
  if (abs(u.norm() - Scalar(1)) > Scalar(1e-12))
    throw std::invalid_argument("atom: direction must have unit norm");
  CollectiveMatrix<Scalar> x;
  x.schema = schema;
  x.views.reserve(s.view_count());
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    x.views.push_back(u.segment(s.entity_offset(d.row_entity), s.view_rows(v)) *
                      u.segment(s.entity_offset(d.col_entity), s.view_cols(v)).transpose());
  }
  return x;
}

template <class Scalar>
CollectiveMatrix<Scalar> operator+(const CollectiveMatrix<Scalar>& x, const CollectiveMatrix<Scalar>& y) {
  require_same_schema(x, y);
  CollectiveMatrix<Scalar> z = x;
  for (std::size_t v = 0; v < z.views.size(); ++v) z.views[v] += y.views[v];
  return z;
}

template <class Scalar>
CollectiveMatrix<Scalar> operator-(const CollectiveMatrix<Scalar>& x, const CollectiveMatrix<Scalar>& y) {
  require_same_schema(x, y);
  CollectiveMatrix<Scalar> z = x;
  for (std::size_t v = 0; v < z.views.size(); ++v) z.views[v] -= y.views[v];
  return z;
}

template <class Scalar>
CollectiveMatrix<Scalar> operator*(Scalar c, const CollectiveMatrix<Scalar>& x) {
  CollectiveMatrix<Scalar> z = x;
  for (auto& m : z.views) m *= c;
  return z;
}

template <class Scalar>
CollectiveMatrix<Scalar> operator*(const CollectiveMatrix<Scalar>& x, Scalar c) {
  return c * x;
}

}  // namespace xmc
