#pragma once

// Chi-square helpers for the sampler goodness-of-fit tests. The critical
// value comes from inverting the regularized upper incomplete gamma
// function, so no table lookups are involved.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace xmc_test {

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion (x < a+1).
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by continued fraction (x >= a+1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Q(a, x) = 1 - P(a, x), the survival function of Gamma(a, 1).
inline double gamma_q(double a, double x) {
  if (!(a > 0) || x < 0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Upper-tail probability of a chi-square variate.
inline double chi_square_sf(double statistic, int dof) {
  return gamma_q(dof / 2.0, statistic / 2.0);
}

// Critical value x with P(X > x) = significance, by bisection.
inline double chi_square_critical_value(int dof, double significance) {
  if (dof < 1 || !(significance > 0) || !(significance < 1))
    throw std::invalid_argument("chi_square_critical_value: bad arguments");
  double lo = 0.0;
  double hi = dof + 10.0;
  while (chi_square_sf(hi, dof) > significance) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_sf(mid, dof) > significance)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double chi_square_statistic(const std::vector<double>& observed,
                                   const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_statistic: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0)) throw std::invalid_argument("chi_square_statistic: nonpositive expected");
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

}  // namespace xmc_test
