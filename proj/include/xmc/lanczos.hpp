#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "xmc/rng.hpp"
#include "xmc/types.hpp"

namespace xmc {

template <class Scalar>
struct TopEigenResult {
  DenseVector<Scalar> vector;
  Scalar value = 0;      // Rayleigh quotient of `vector`
  Scalar residual = 0;   // ||A v - value v||
  bool converged = false;
  int matvecs = 0;
};

namespace detail {

// Top Ritz pair of the symmetric tridiagonal (alpha, beta) of dimension k.
template <class Scalar>
void top_ritz(const std::vector<Scalar>& alpha, const std::vector<Scalar>& beta, int k,
              Scalar& theta, DenseVector<Scalar>& s) {
  DenseMatrix<Scalar> t = DenseMatrix<Scalar>::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < k) {
      t(i, i + 1) = beta[i];
      t(i + 1, i) = beta[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(t);
  theta = es.eigenvalues()(k - 1);
  s = es.eigenvectors().col(k - 1);
}

}  // namespace detail

// Largest eigenpair of a symmetric operator given only by its matvec.
// Lanczos with full reorthogonalization; the returned pair is certified by
// the true residual, which bounds the distance from `value` to a point of the
// spectrum. Deterministic for a fixed seed (and warm start).
//
// max_steps limits the Krylov dimension per restart round; when the budget
// runs out the best pair so far is returned with converged=false.
template <class Scalar, class MatVec>
TopEigenResult<Scalar> approx_top_eigvec(MatVec&& apply, Index n, Scalar tol, std::uint64_t seed,
                                         int max_steps = 0, const DenseVector<Scalar>* warm_start = nullptr,
                                         int restarts = 2) {
  using std::abs;
  using std::sqrt;
  if (n <= 0) throw std::invalid_argument("approx_top_eigvec: empty operator");
  if (!(tol >= Scalar(0))) throw std::invalid_argument("approx_top_eigvec: negative tolerance");
  if (max_steps <= 0) max_steps = static_cast<int>(std::min<Index>(n, 600));
  max_steps = static_cast<int>(std::min<Index>(max_steps, n));

  TopEigenResult<Scalar> best;
  DenseVector<Scalar> v0;
  if (warm_start && warm_start->size() == n && warm_start->norm() > Scalar(0))
    v0 = warm_start->normalized();
  else {
    Rng rng(derive_seed(seed, 0x1a9c0));
    v0 = rng.gaussian_vector<Scalar>(n).normalized();
  }

  DenseVector<Scalar> av(n);
  for (int round = 0; round <= restarts; ++round) {
    DenseMatrix<Scalar> basis(n, max_steps);
    std::vector<Scalar> alpha, beta;
    alpha.reserve(max_steps);
    beta.reserve(max_steps);

    basis.col(0) = v0;
    DenseVector<Scalar> w(n);
    int k = 0;
    bool invariant = false;
    Scalar theta = 0;
    DenseVector<Scalar> ritz;

    while (k < max_steps) {
      apply(basis.col(k), av);
      ++best.matvecs;
      w = av;
      const Scalar a = basis.col(k).dot(w);
      alpha.push_back(a);
      w -= a * basis.col(k);
      if (k > 0) w -= beta[k - 1] * basis.col(k - 1);
      // Two classical Gram-Schmidt sweeps keep the basis orthonormal.
      for (int pass = 0; pass < 2; ++pass) {
        const DenseVector<Scalar> proj = basis.leftCols(k + 1).transpose() * w;
        w.noalias() -= basis.leftCols(k + 1) * proj;
      }
      const Scalar b = w.norm();
      ++k;

      const bool check = (k <= 32) || (k % 8 == 0) || (k == max_steps) || b <= tol;
      if (check) {
        detail::top_ritz(alpha, beta, k, theta, ritz);
        const Scalar resid_est = (k < max_steps && b > Scalar(0)) ? abs(b * ritz(k - 1)) : Scalar(0);
        if (b <= Scalar(1e-14) * std::max<Scalar>(Scalar(1), abs(theta))) {
          invariant = true;
          break;
        }
        if (resid_est <= tol / Scalar(2)) break;
      }
      if (b <= Scalar(0)) {
        invariant = true;
        if (ritz.size() == 0) detail::top_ritz(alpha, beta, k, theta, ritz);
        break;
      }
      beta.push_back(b);
      basis.col(k) = w / b;
    }

    if (ritz.size() == 0) detail::top_ritz(alpha, beta, k, theta, ritz);
    DenseVector<Scalar> u = basis.leftCols(k) * ritz;
    u.normalize();
    apply(u, av);
    ++best.matvecs;
    const Scalar value = u.dot(av);
    const Scalar resid = (av - value * u).norm();

    if (best.vector.size() == 0 || value > best.value) {
      best.vector = u;
      best.value = value;
      best.residual = resid;
    }
    if (best.residual <= tol || invariant) {
      best.converged = best.residual <= std::max(tol, Scalar(1e-14) * std::max<Scalar>(Scalar(1), abs(best.value)));
      if (invariant) best.converged = true;
      return best;
    }
    v0 = best.vector;  // restart from the best pair so far
  }
  best.converged = best.residual <= tol;
  return best;
}

// Dense convenience overload, mostly for tests and small norm queries.
template <class Scalar>
TopEigenResult<Scalar> approx_top_eigvec(const DenseMatrix<Scalar>& a, Scalar tol, std::uint64_t seed,
                                         int max_steps = 0) {
  if (a.rows() != a.cols()) throw std::invalid_argument("approx_top_eigvec: matrix not square");
  return approx_top_eigvec<Scalar>(
      [&a](const Eigen::Ref<const DenseVector<Scalar>>& x, DenseVector<Scalar>& y) { y.noalias() = a * x; },
      a.rows(), tol, seed, max_steps);
}

}  // namespace xmc
