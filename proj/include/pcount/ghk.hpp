#pragma once

// GHK sequential importance sampler for the likelihood
//   P(X_1 = x_1, ..., X_n = x_n) = P(Z_t in (a_t, b_t], t = 1..n),
// a_t = Phi^{-1}(C_{x_t - 1}(s(t))), b_t = Phi^{-1}(C_{x_t}(s(t))).
// Each particle draws Z_t from its one-step predictive law truncated to
// (a_t, b_t] and multiplies its weight by the predictive mass of the
// interval. Weights are carried in log space; there is no resampling.

#include "pcount/count_law.hpp"
#include "pcount/errors.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"
#include "pcount/normal.hpp"
#include "pcount/random.hpp"
#include "pcount/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace pcount {

/// Per-time latent intervals implied by the data.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

inline Bounds bounds_from_data(const std::vector<CountLaw>& laws_by_season, const CountSeries& data) {
  const int T = static_cast<int>(laws_by_season.size());
  if (T != data.period) throw DataError("data period differs from model period");
  Bounds b;
  b.lower.resize(data.size());
  b.upper.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const long t = static_cast<long>(i) + 1;
    const long x = data.x[i];
    const CountLaw& law = laws_by_season[season_of(t, T) - 1];
    if (x < 0 || law.pmf(x) <= 0.0)
      throw DataError("count " + std::to_string(x) + " at t=" + std::to_string(t) +
                          " lies outside the marginal support",
                      static_cast<std::size_t>(t));
    b.lower[i] = law.probit_cdf(x - 1);
    b.upper[i] = law.probit_cdf(x);
  }
  return b;
}

inline Bounds bounds_from_data(const MarginalSpec& marginal, const CountSeries& data) {
  return bounds_from_data(marginal.laws(), data);
}

/// One truncated-normal draw together with the log mass of its interval.
struct TruncatedStep {
  double value = 0.0;       // standardized draw in (lo, hi)
  double log_mass = 0.0;    // log(Phi(hi) - Phi(lo))
  bool degenerate = false;  // interval mass not resolvable; midpoint returned
};

/// Inverse-CDF draw from N(0,1) restricted to (lo, hi) at uniform u. The map
/// is smooth in (lo, hi) for fixed u, which keeps CRN likelihoods smooth.
inline TruncatedStep standard_truncated_step(double lo, double hi, double u) {
  if (lo > 0.0) {
    // Work in the lower tail of the mirrored interval.
    TruncatedStep s = standard_truncated_step(-hi, -lo, 1.0 - u);
    s.value = -s.value;
    return s;
  }
  TruncatedStep s;
  if (hi > 0.0) {
    const double pa = norm_cdf(lo);
    const double pb = norm_cdf(hi);
    const double mass = pb - pa;
    s.log_mass = std::log(mass);
    const double p = pa + u * mass;
    if (p <= 0.5) {
      s.value = norm_quantile(p);
    } else {
      const double q = (1.0 - u) * mass + norm_sf(hi);
      s.value = norm_quantile_upper(q);
    }
  } else {
    const double la = log_norm_cdf(lo);
    const double lb = log_norm_cdf(hi);
    if (!(la < lb)) {
      s.degenerate = true;
      s.log_mass = log_interval_prob(lo, hi);
      s.value = std::isfinite(lo) ? 0.5 * (lo + hi) : hi;
      return s;
    }
    const double ratio = std::exp(la - lb);
    s.log_mass = lb + std::log1p(-ratio);
    if (lb > -700.0) {
      const double pa = std::exp(la), pb = std::exp(lb);
      s.value = norm_quantile(pa + u * (pb - pa));
    } else {
      s.value = norm_quantile_log(lb + std::log(u + (1.0 - u) * ratio));
    }
  }
  // Keep the draw strictly inside the interval despite rounding.
  if (!(s.value > lo)) s.value = std::nextafter(lo, kInf);
  if (!(s.value < hi)) s.value = std::nextafter(hi, -kInf);
  return s;
}

struct TruncatedDraw {
  double value = 0.0;
  bool degenerate = false;
};

/// Draw from N(mean, sd^2) truncated to (a, b) by inversion at uniform u.
inline TruncatedDraw sample_truncated_normal(double mean, double sd, double a, double b, double u) {
  if (!(a < b)) throw DomainError("sample_truncated_normal: need a < b");
  if (!(sd > 0.0)) throw DomainError("sample_truncated_normal: need sd > 0");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("sample_truncated_normal: need u in (0, 1)");
  const auto s = standard_truncated_step((a - mean) / sd, (b - mean) / sd, u);
  double value = mean + sd * s.value;
  value = std::clamp(value, std::nextafter(a, kInf), std::nextafter(b, -kInf));
  return {value, s.degenerate};
}

struct GhkOptions {
  std::size_t particles = 500;
  std::uint64_t crn_seed = 1;
  /// Record the filtered conditional CDFs P_t(x_t - 1), P_t(x_t).
  bool track_pit = false;
};

struct LikelihoodEstimate {
  double loglik = 0.0;
  std::size_t particles = 0;
  std::uint64_t crn_seed = 0;
  /// P_t(x_t - 1) and P_t(x_t), filled when track_pit is set.
  std::vector<double> pit_lower;
  std::vector<double> pit_upper;
  std::size_t degenerate_draws = 0;
};

/// Predictive probabilities w_{i,t}(zhat) = Phi((b_i - zhat)/r) - Phi((a_i - zhat)/r)
/// over the support, i = 0, 1, ... until the remaining mass is below 1e-15.
inline std::vector<double> pit_weights(const CountLaw& law, double zhat, double sd) {
  std::vector<double> w;
  double prev = 0.0;
  const long top = law.support_max().value_or(std::numeric_limits<long>::max());
  for (long i = 0; i <= top; ++i) {
    const double upper = i == top ? 1.0 : norm_cdf((law.probit_cdf(i) - zhat) / sd);
    w.push_back(upper - prev);
    prev = upper;
    if (upper >= 1.0 - 1e-15) break;
  }
  return w;
}

/// GHK estimate of the log-likelihood with m particles and a fixed CRN grid.
inline LikelihoodEstimate ghk_loglik(const MarginalSpec& marginal, const LatentSpec& latent,
                                     const CountSeries& data, const GhkOptions& options = {}) {
  if (options.particles < 1) throw DomainError("ghk_loglik: need at least one particle");
  if (marginal.period != latent.period) throw InvalidParameter("marginal and latent periods differ");
  if (data.size() == 0) throw DataError("ghk_loglik: empty series");
  const auto laws = marginal.laws();
  const PredictionPlan plan(latent);
  const Bounds bounds = bounds_from_data(laws, data);

  const std::size_t m = options.particles;
  const std::size_t n = data.size();
  const std::size_t rows = plan.memory() + 1;
  const CrnGrid crn(options.crn_seed);

  // Ring buffer of latent paths: row (t - 1) % rows holds z_t for all particles.
  std::vector<double> z(rows * m, 0.0);
  std::vector<double> logw(m, 0.0);
  std::vector<double> zhat(m, 0.0);

  LikelihoodEstimate out;
  out.particles = m;
  out.crn_seed = options.crn_seed;
  if (options.track_pit) {
    out.pit_lower.resize(n);
    out.pit_upper.resize(n);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const long t = static_cast<long>(i) + 1;
    const auto& rule = plan.rule(t);
    const double sd = rule.sd;
    const double a = bounds.lower[i];
    const double b = bounds.upper[i];

    std::fill(zhat.begin(), zhat.end(), 0.0);
    for (std::size_t j = 0; j < rule.weights.size(); ++j) {
      const double wj = rule.weights[j];
      const double* past = &z[((t - 2 - static_cast<long>(j)) % static_cast<long>(rows)) * m];
      for (std::size_t k = 0; k < m; ++k) zhat[k] += wj * past[k];
    }

    if (options.track_pit) {
      double top = -kInf;
      for (double lw : logw) top = std::max(top, lw);
      double total = 0.0, lower = 0.0, upper = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (logw[k] == -kInf) continue;
        const double w = std::exp(logw[k] - top);
        total += w;
        lower += w * norm_cdf((a - zhat[k]) / sd);
        upper += w * norm_cdf((b - zhat[k]) / sd);
      }
      out.pit_lower[i] = lower / total;
      out.pit_upper[i] = upper / total;
    }

    double* row = &z[(i % rows) * m];
    bool alive = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (logw[k] == -kInf) {
        row[k] = zhat[k];
        continue;
      }
      const auto step = standard_truncated_step((a - zhat[k]) / sd, (b - zhat[k]) / sd, crn(t, k));
      out.degenerate_draws += step.degenerate ? 1 : 0;
      logw[k] += step.log_mass;
      row[k] = zhat[k] + sd * step.value;
      alive = alive || logw[k] > -kInf;
    }
    if (!alive)
      throw LikelihoodUnderflow("all particle weights vanished at t=" + std::to_string(t),
                                static_cast<std::size_t>(t));
  }

  double top = -kInf;
  for (double lw : logw) top = std::max(top, lw);
  double acc = 0.0;
  for (double lw : logw) acc += std::exp(lw - top);
  out.loglik = top + std::log(acc) - std::log(static_cast<double>(m));
  return out;
}

}  // namespace pcount
