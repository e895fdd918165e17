#pragma once

// Model adequacy checks: nonrandomized PIT histograms, probit mid-PIT
// residuals and sample ACF/PACF.

#include "pcount/errors.hpp"
#include "pcount/ghk.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"
#include "pcount/normal.hpp"
#include "pcount/simulate.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pcount {

/// F_t(u | y) for conditional CDF values lower = P_t(y-1), upper = P_t(y):
/// 0 below lower, 1 above upper, linear in between.
inline double pit_conditional_cdf(double u, double lower, double upper) {
  if (u <= lower) return 0.0;
  if (u >= upper) return 1.0;
  return (u - lower) / (upper - lower);
}

/// Mean PIT F(u) = n^{-1} sum_t F_t(u | x_t).
inline double mean_pit(double u, const std::vector<double>& lower, const std::vector<double>& upper) {
  double acc = 0.0;
  for (std::size_t t = 0; t < lower.size(); ++t) acc += pit_conditional_cdf(u, lower[t], upper[t]);
  return acc / static_cast<double>(lower.size());
}

struct PitSummary {
  int bins = 10;
  std::vector<double> edges;   // 0, 1/J, ..., 1
  std::vector<double> masses;  // F(j/J) - F((j-1)/J)
  std::vector<double> pit_lower;
  std::vector<double> pit_upper;
};

inline PitSummary pit_summary_from(std::vector<double> lower, std::vector<double> upper, int bins = 10) {
  if (bins < 1) throw DomainError("pit_summary: need at least one bin");
  if (lower.empty() || lower.size() != upper.size()) throw DomainError("pit_summary: bad conditional CDFs");
  PitSummary s;
  s.bins = bins;
  std::vector<double> F(bins + 1);
  for (int j = 0; j <= bins; ++j) {
    s.edges.push_back(static_cast<double>(j) / bins);
    F[j] = mean_pit(s.edges[j], lower, upper);
  }
  F[0] = 0.0;
  F[bins] = 1.0;
  for (int j = 1; j <= bins; ++j) s.masses.push_back(F[j] - F[j - 1]);
  s.pit_lower = std::move(lower);
  s.pit_upper = std::move(upper);
  return s;
}

/// One filter pass recording P_t(x_t - 1) and P_t(x_t), then the J-bin PIT
/// histogram of the mean PIT.
inline PitSummary pit_summary(const MarginalSpec& marginal, const LatentSpec& latent, const CountSeries& data,
                              std::size_t particles, std::uint64_t crn_seed, int bins = 10) {
  auto est = ghk_loglik(marginal, latent, data, {particles, crn_seed, true});
  return pit_summary_from(std::move(est.pit_lower), std::move(est.pit_upper), bins);
}

struct ChiSquareTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of n * masses against n / J per bin.
inline ChiSquareTest pit_chi_square(const PitSummary& s) {
  const double n = static_cast<double>(s.pit_lower.size());
  const double expected = n / s.bins;
  ChiSquareTest out;
  for (double m : s.masses) out.statistic += (n * m - expected) * (n * m - expected) / expected;
  out.df = s.bins - 1;
  if (out.df < 1) return out;
  boost::math::chi_squared dist(out.df);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

inline constexpr double kResidualClamp = 1e-12;

/// r_t = Phi^{-1}((P_t(x_t - 1) + P_t(x_t)) / 2), clamped away from 0 and 1.
inline std::vector<double> residuals_from(const std::vector<double>& lower, const std::vector<double>& upper) {
  std::vector<double> r(lower.size());
  for (std::size_t t = 0; t < lower.size(); ++t) {
    const double mid = 0.5 * (lower[t] + upper[t]);
    r[t] = norm_quantile(std::clamp(mid, kResidualClamp, 1.0 - kResidualClamp));
  }
  return r;
}

inline std::vector<double> residuals(const MarginalSpec& marginal, const LatentSpec& latent,
                                     const CountSeries& data, std::size_t particles, std::uint64_t crn_seed) {
  const auto est = ghk_loglik(marginal, latent, data, {particles, crn_seed, true});
  return residuals_from(est.pit_lower, est.pit_upper);
}

struct Correlogram {
  std::vector<double> acf;   // lags 0..max_lag
  std::vector<double> pacf;  // lags 0..max_lag (pacf[0] = 1 by convention)
};

/// Sample ACF (denominator n) and PACF by Durbin-Levinson on the sample ACF.
inline Correlogram acf_pacf(const std::vector<double>& x, int max_lag) {
  const std::size_t n = x.size();
  if (max_lag < 0 || n <= static_cast<std::size_t>(max_lag))
    throw DomainError("acf_pacf: need 0 <= max lag < series length");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  if (!(c0 > 0.0)) throw DomainError("acf_pacf: constant series has zero variance");
  Correlogram out;
  out.acf.resize(max_lag + 1);
  for (int h = 0; h <= max_lag; ++h) {
    double ch = 0.0;
    for (std::size_t t = h; t < n; ++t) ch += (x[t] - mean) * (x[t - h] - mean);
    out.acf[h] = ch / c0;
  }
  out.pacf.assign(max_lag + 1, 0.0);
  out.pacf[0] = 1.0;
  std::vector<double> prev;
  double v = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double num = out.acf[k];
    for (int j = 1; j < k; ++j) num -= prev[j - 1] * out.acf[k - j];
    const double phikk = v > 0.0 ? num / v : 0.0;
    std::vector<double> cur(k);
    for (int j = 1; j < k; ++j) cur[j - 1] = prev[j - 1] - phikk * prev[k - j - 1];
    cur[k - 1] = phikk;
    v *= 1.0 - phikk * phikk;
    out.pacf[k] = phikk;
    prev = std::move(cur);
  }
  return out;
}

}  // namespace pcount
