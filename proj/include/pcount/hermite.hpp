#pragma once

// Hermite expansion of G_nu = F_nu^{-1} o Phi and the link function mapping
// latent Gaussian correlations to count correlations.

#include "pcount/count_law.hpp"
#include "pcount/errors.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"
#include "pcount/normal.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace pcount {

inline constexpr int kDefaultHermiteOrder = 30;

/// Breakpoint sums stop once C_j > 1 - kCdfCutoff.
inline constexpr double kCdfCutoff = 1e-12;

/// Probabilists' Hermite polynomial He_k(x) by the three-term recursion
/// He_k = x He_{k-1} - (k-1) He_{k-2}.
inline double hermite_poly(int k, double x) {
  if (k < 0) throw DomainError("hermite_poly: order must be >= 0");
  if (k == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int n = 2; n <= k; ++n) {
    const double next = x * cur - (n - 1) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// He_0(x)/sqrt(0!), ..., He_kmax(x)/sqrt(kmax!). Stays finite for large
/// orders where He_k itself would overflow.
inline std::vector<double> normalized_hermite(int kmax, double x) {
  std::vector<double> h(kmax + 1);
  h[0] = 1.0;
  if (kmax >= 1) h[1] = x;
  for (int n = 2; n <= kmax; ++n) h[n] = (x * h[n - 1] - std::sqrt(n - 1.0) * h[n - 2]) / std::sqrt(double(n));
  return h;
}

/// Hermite coefficients of one season's G_nu.
struct HermiteCoeffs {
  int order = 0;
  /// sqrt(k!) g_k for k = 1..order (index k-1); k! g_k^2 = normalized[k-1]^2.
  std::vector<double> normalized;
  /// The finite values Phi^{-1}(C_j) entering the expansion.
  std::vector<double> probits;
  double mean = 0.0;   // g_0
  double sigma2 = 0.0; // sum_{k<=order} k! g_k^2

  double g(int k) const {
    if (k == 0) return mean;
    if (k < 0 || k > order) throw DomainError("HermiteCoeffs::g: order out of range");
    return normalized[k - 1] * std::exp(-0.5 * std::lgamma(k + 1.0));
  }
};

/// Finite breakpoints Phi^{-1}(C_j), j = 0, 1, ... until C_j > 1 - kCdfCutoff.
inline std::vector<double> probit_breakpoints(const CountLaw& law) {
  std::vector<double> out;
  for (long j = 0;; ++j) {
    const double tail = law.sf(j);
    if (tail < kCdfCutoff) break;
    if (law.cdf(j) <= 0.0) continue;
    out.push_back(law.probit_cdf(j));
  }
  return out;
}

/// g_k = (1/(k! sqrt(2 pi))) sum_j exp(-a_j^2/2) He_{k-1}(a_j), a_j = Phi^{-1}(C_j).
inline HermiteCoeffs hermite_coeffs(const CountLaw& law, int order = kDefaultHermiteOrder) {
  if (order < 1) throw DomainError("hermite_coeffs: order must be >= 1");
  HermiteCoeffs out;
  out.order = order;
  out.mean = law.mean();
  out.probits = probit_breakpoints(law);
  out.normalized.assign(order, 0.0);
  for (double a : out.probits) {
    const double weight = std::exp(-0.5 * a * a);
    const auto h = normalized_hermite(order - 1, a);
    for (int k = 1; k <= order; ++k) out.normalized[k - 1] += weight * h[k - 1];
  }
  const double scale = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int k = 1; k <= order; ++k) {
    out.normalized[k - 1] *= scale / std::sqrt(double(k));
    out.sigma2 += out.normalized[k - 1] * out.normalized[k - 1];
  }
  return out;
}

inline HermiteCoeffs hermite_coeffs(const MarginalSpec& spec, int season,
                                    int order = kDefaultHermiteOrder) {
  return hermite_coeffs(spec.law(season), order);
}

/// Variance of X_nu carried by the first `order` Hermite terms. Converges to
/// the pmf variance from below as the order grows.
inline double count_variance(const MarginalSpec& spec, int season, int order = kDefaultHermiteOrder) {
  return hermite_coeffs(spec, season, order).sigma2;
}

/// Link power series L(u) = sum_k l_k u^k for a pair of seasons, normalized
/// by the truncated variances so that L(1) = 1 for identical seasons.
struct LinkTable {
  std::vector<double> coef;  // l_1..l_K
  double sd1 = 1.0;
  double sd2 = 1.0;
  std::vector<double> probits1;
  std::vector<double> probits2;

  int order() const { return static_cast<int>(coef.size()); }
};

inline LinkTable make_link_table(const HermiteCoeffs& first, const HermiteCoeffs& second) {
  if (first.order != second.order) throw DomainError("make_link_table: orders differ");
  if (!(first.sigma2 > 0.0) || !(second.sigma2 > 0.0))
    throw DomainError("make_link_table: degenerate marginal (zero variance)");
  LinkTable table;
  table.sd1 = std::sqrt(first.sigma2);
  table.sd2 = std::sqrt(second.sigma2);
  table.coef.resize(first.order);
  for (int k = 0; k < first.order; ++k)
    table.coef[k] = first.normalized[k] * second.normalized[k] / (table.sd1 * table.sd2);
  table.probits1 = first.probits;
  table.probits2 = second.probits;
  return table;
}

inline LinkTable make_link_table(const MarginalSpec& spec, int season1, int season2,
                                 int order = kDefaultHermiteOrder) {
  return make_link_table(hermite_coeffs(spec, season1, order), hermite_coeffs(spec, season2, order));
}

inline double link_eval(const LinkTable& table, double u) {
  if (!(u >= -1.0 && u <= 1.0)) throw DomainError("link_eval: u must lie in [-1, 1]");
  double acc = 0.0;
  for (int k = table.order(); k >= 1; --k) acc = acc * u + table.coef[k - 1];
  return acc * u;
}

/// Closed-form L'(u) as a double sum of bivariate normal kernels over the
/// breakpoint pairs.
inline double link_derivative(const LinkTable& table, double u) {
  if (!(u > -1.0 && u < 1.0)) throw DomainError("link_derivative: need |u| < 1");
  const double one_minus = 1.0 - u * u;
  double sum = 0.0;
  for (double a : table.probits1)
    for (double b : table.probits2) sum += std::exp(-(a * a + b * b - 2.0 * u * a * b) / (2.0 * one_minus));
  return sum / (2.0 * std::numbers::pi * std::sqrt(one_minus) * table.sd1 * table.sd2);
}

struct CorrelationBounds {
  double min = 0.0;
  double max = 0.0;
};

namespace detail {

// Quantile function of a law as a list of (right end of u-interval, value).
inline std::vector<std::pair<double, long>> quantile_steps(const CountLaw& law) {
  std::vector<std::pair<double, long>> steps;
  const long top = law.tail_cutoff(1e-17);
  for (long j = 0; j <= top; ++j) {
    const double c = j == top ? 1.0 : law.cdf(j);
    if (steps.empty() || c > steps.back().first) steps.emplace_back(c, j);
  }
  return steps;
}

inline double integrate_quantile_product(const std::vector<std::pair<double, long>>& s1,
                                         const std::vector<std::pair<double, long>>& s2) {
  double total = 0.0, u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < s1.size() && j < s2.size()) {
    const double next = std::min(s1[i].first, s2[j].first);
    total += static_cast<double>(s1[i].second) * static_cast<double>(s2[j].second) * (next - u);
    u = next;
    if (s1[i].first <= next) ++i;
    if (j < s2.size() && s2[j].first <= next) ++j;
  }
  return total;
}

}  // namespace detail

/// Largest and smallest correlation attainable by any pair with the given
/// marginals: Corr(F1^{-1}(U), F2^{-1}(U)) and Corr(F1^{-1}(U), F2^{-1}(1-U)),
/// integrated exactly over the step quantile functions.
inline CorrelationBounds correlation_bounds(const CountLaw& first, const CountLaw& second) {
  const double v1 = first.variance(), v2 = second.variance();
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw DomainError("correlation_bounds: degenerate marginal");
  const auto s1 = detail::quantile_steps(first);
  const auto s2 = detail::quantile_steps(second);
  // F2^{-1}(1-u) as steps in u: value j on [1 - C_j, 1 - C_{j-1}).
  std::vector<std::pair<double, long>> s2_reversed;
  for (std::size_t k = s2.size(); k-- > 0;) {
    const double right = k == 0 ? 1.0 : 1.0 - s2[k - 1].first;
    s2_reversed.emplace_back(right, s2[k].second);
  }
  s2_reversed.back().first = 1.0;
  const double mm = first.mean() * second.mean();
  const double denom = std::sqrt(v1 * v2);
  return {(detail::integrate_quantile_product(s1, s2_reversed) - mm) / denom,
          (detail::integrate_quantile_product(s1, s2) - mm) / denom};
}

inline CorrelationBounds correlation_bounds(const MarginalSpec& spec, int season1, int season2) {
  return correlation_bounds(spec.law(season1), spec.law(season2));
}

/// Corr(X_t, X_r) = L(rho_Z(t, r)) using the link of seasons (s(t), s(r)).
inline double count_acf(const MarginalSpec& marginal, const LatentSpec& latent, long t, long r,
                        int order = kDefaultHermiteOrder) {
  if (t == r) return 1.0;
  const double rho = acf(latent, t, r);
  const auto table = make_link_table(marginal, season_of(t, marginal.period),
                                     season_of(r, marginal.period), order);
  return link_eval(table, rho);
}

}  // namespace pcount
