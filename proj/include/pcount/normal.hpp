#pragma once

// Standard normal distribution helpers used throughout the library.
//
// Lower-tail quantities are computed directly from erfc so that both tails
// keep full relative precision; everything that can underflow has a log-space
// variant.

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace pcount {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Phi(x).
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// 1 - Phi(x), accurate in the upper tail.
inline double norm_sf(double x) { return norm_cdf(-x); }

/// log Phi(x), finite for every finite x.
inline double log_norm_cdf(double x) {
  if (x == -kInf) return -kInf;
  if (x > 5.0) return std::log1p(-norm_sf(x));
  if (x > -35.0) return std::log(norm_cdf(x));
  // Mills-ratio asymptotic series; relative error < 1e-15 for x <= -35.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) +
                        105.0 / (x2 * x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

/// Phi^{-1}(p) with Phi^{-1}(0) = -inf and Phi^{-1}(1) = +inf.
inline double norm_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Phi^{-1}(1 - q) evaluated from the upper-tail mass q.
inline double norm_quantile_upper(double q) { return -norm_quantile(q); }

/// Phi^{-1}(exp(log_p)); works for probabilities far below DBL_MIN.
inline double norm_quantile_log(double log_p) {
  if (log_p == -kInf) return -kInf;
  if (log_p >= 0.0) return kInf;
  if (log_p > -680.0) return norm_quantile(std::exp(log_p));
  double x = -std::sqrt(-2.0 * log_p);
  for (int it = 0; it < 50; ++it) {
    const double lc = log_norm_cdf(x);
    const double hazard =
        std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - lc);
    const double step = (lc - log_p) / hazard;
    x -= step;
    if (std::abs(step) < 1e-14 * std::abs(x)) break;
  }
  return x;
}

/// log(Phi(b) - Phi(a)) for a < b, computed on whichever tail avoids
/// cancellation.
inline double log_interval_prob(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a > 0.0) return log_interval_prob(-b, -a);
  // Now a <= 0: Phi(a) <= 1/2.
  if (b > 0.0) {
    // The interval contains 0, so the mass is bounded away from zero unless a
    // and b are both near 0.
    return std::log(norm_cdf(b) - norm_cdf(a));
  }
  const double lb = log_norm_cdf(b);
  const double la = log_norm_cdf(a);
  const double ratio = std::exp(la - lb);
  if (ratio < 1.0) return lb + std::log1p(-ratio);
  // Intervals narrower than the resolution of Phi: midpoint rule in log space.
  const double mid = 0.5 * (a + b);
  return -0.5 * mid * mid - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(b - a);
}

}  // namespace pcount
