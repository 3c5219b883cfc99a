#pragma once

#include <cmath>
#include <limits>

#include "safex/errors.hpp"

namespace safex {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse standard normal CDF. Bracketed Newton on erfc; accurate to ~1e-14.
inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "normal_quantile needs p in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -normal_quantile(1.0 - p);  // 1 - p is exact here
  double lo = -40.0, hi = 40.0;
  double x = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double f = normal_cdf(x) - p;
    if (f > 0) hi = x; else lo = x;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    double next = pdf > 0 ? x - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

/// Regularised lower incomplete gamma P(a, x).
///
/// Series for x < a + 1, Lentz continued fraction for Q(a, x) otherwise.
inline double regularized_gamma_p(double a, double x) {
  detail::require(a > 0.0, "incomplete gamma needs a > 0");
  detail::require(x >= 0.0, "incomplete gamma needs x >= 0");
  if (x == 0.0) return 0.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 10000;
  if (x < a + 1.0) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

inline double chi_squared_cdf(double x, int dof) {
  detail::require(dof >= 1, "chi-squared needs dof >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

/// Chi-squared quantile: bracket, then safeguarded Newton on the CDF.
inline double chi_squared_inv_cdf(double p, int dof) {
  detail::require(p > 0.0 && p < 1.0, "chi_squared_inv_cdf needs p in (0, 1)");
  detail::require(dof >= 1, "chi_squared_inv_cdf needs dof >= 1");
  const double k = dof;
  double lo = 0.0;
  double hi = std::max(1.0, k);
  while (chi_squared_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double f = chi_squared_cdf(x, dof) - p;
    if (f == 0.0) return x;
    if (f > 0) hi = x; else lo = x;
    const double log_pdf =
        (0.5 * k - 1.0) * std::log(x) - 0.5 * x - 0.5 * k * std::log(2.0) - std::lgamma(0.5 * k);
    const double pdf = std::exp(log_pdf);
    double next = (pdf > 0 && std::isfinite(pdf)) ? x - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi) return next;
    x = next;
  }
  return x;
}

}  // namespace safex
