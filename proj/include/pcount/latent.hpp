#pragma once

// Standardized latent Gaussian processes (Var Z_t = 1 for every t):
// white noise, AR(1), periodic AR(1) with a cosine coefficient curve, and the
// seasonal AR(1) at lag T driven by AR(1) noise.

#include "pcount/errors.hpp"
#include "pcount/fourier.hpp"
#include "pcount/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pcount {

enum class LatentKind { WN, AR1, PAR1, SAR1 };

inline std::string_view to_string(LatentKind k) {
  switch (k) {
    case LatentKind::WN: return "wn";
    case LatentKind::AR1: return "ar1";
    case LatentKind::PAR1: return "par1";
    case LatentKind::SAR1: return "sar1";
  }
  return "?";
}

inline LatentKind parse_latent_kind(std::string_view name) {
  if (name == "wn") return LatentKind::WN;
  if (name == "ar1") return LatentKind::AR1;
  if (name == "par1") return LatentKind::PAR1;
  if (name == "sar1") return LatentKind::SAR1;
  throw ConfigError("unknown latent kind '" + std::string(name) +
                    "' (expected wn, ar1, par1 or sar1)");
}

struct LatentSpec {
  LatentKind kind = LatentKind::WN;
  int period = 1;
  double phi = 0.0;    // AR1 coefficient, or the SAR1 seasonal coefficient
  double alpha = 0.0;  // SAR1 noise AR(1) coefficient
  FourierCurve phi_curve;  // PAR1 coefficient curve

  static LatentSpec white_noise(int period) { return {LatentKind::WN, period, 0.0, 0.0, {}}; }
  static LatentSpec ar1(double phi, int period) { return {LatentKind::AR1, period, phi, 0.0, {}}; }
  static LatentSpec par1(FourierCurve phi) { return {LatentKind::PAR1, phi.period, 0.0, 0.0, phi}; }
  static LatentSpec sar1(double phi, double alpha, int period) {
    return {LatentKind::SAR1, period, phi, alpha, {}};
  }
};

/// sigma_eps^2 = (1-phi^2)(1-alpha^2)(1-phi alpha^T)/(1+phi alpha^T), the
/// innovation variance that gives the SAR(1) process unit variance.
inline double sar1_innovation_variance(double phi, double alpha, int period) {
  const double aT = std::pow(alpha, period);
  return (1.0 - phi * phi) * (1.0 - alpha * alpha) * (1.0 - phi * aT) / (1.0 + phi * aT);
}

inline void validate(const LatentSpec& spec) {
  if (spec.period < 1) throw InvalidParameter("latent period must be >= 1");
  switch (spec.kind) {
    case LatentKind::WN: return;
    case LatentKind::AR1:
      if (!(std::abs(spec.phi) < 1.0)) throw InvalidParameter("AR(1): need |phi| < 1");
      return;
    case LatentKind::PAR1: {
      if (spec.phi_curve.period != spec.period)
        throw InvalidParameter("PAR(1): coefficient curve period differs from model period");
      double prod = 1.0;
      for (int s = 1; s <= spec.period; ++s) {
        const double p = spec.phi_curve(s);
        if (!(1.0 - p * p > 0.0))
          throw InvalidParameter("PAR(1): innovation variance 1 - phi(nu)^2 not positive at season " +
                                 std::to_string(s));
        prod *= p;
      }
      if (!(std::abs(prod) < 1.0)) throw InvalidParameter("PAR(1): |prod phi(nu)| must be < 1");
      return;
    }
    case LatentKind::SAR1:
      if (!(std::abs(spec.phi) < 1.0) || !(std::abs(spec.alpha) < 1.0))
        throw InvalidParameter("SAR(1): need |phi| < 1 and |alpha| < 1");
      if (!(sar1_innovation_variance(spec.phi, spec.alpha, spec.period) > 0.0))
        throw InvalidParameter("SAR(1): nonpositive innovation variance");
      return;
  }
}

/// Stationary SAR(1)+AR(1)-noise autocorrelation at lag h.
inline double sar1_acf(double phi, double alpha, int period, long h) {
  h = std::labs(h);
  const double denom = 1.0 + phi * std::pow(alpha, period);
  if (h <= period) return (std::pow(alpha, h) + phi * std::pow(alpha, period - h)) / denom;
  const long a = h / period;
  const long b = h - a * period;
  double value = std::pow(phi, a) * (std::pow(alpha, b) + phi * std::pow(alpha, period - b)) / denom;
  // E(eta_t Z_{t-l}) = (1 - phi^2) alpha^l / (1 + phi alpha^T) for unit-variance Z.
  const double tail = (1.0 - phi * phi) / denom;
  for (long k = 0; k < a; ++k) value += std::pow(phi, k) * std::pow(alpha, h - period * k) * tail;
  return value;
}

/// Corr(Z_t, Z_s) for 1-based times.
inline double acf(const LatentSpec& spec, long t, long s) {
  if (t < 1 || s < 1) throw DomainError("acf: times are 1-based");
  if (t == s) return 1.0;
  if (s > t) std::swap(t, s);
  switch (spec.kind) {
    case LatentKind::WN: return 0.0;
    case LatentKind::AR1: return std::pow(spec.phi, t - s);
    case LatentKind::PAR1: {
      double r = 1.0;
      for (long i = 0; i < t - s; ++i) r *= spec.phi_curve(season_of(t - i, spec.period));
      return r;
    }
    case LatentKind::SAR1: return sar1_acf(spec.phi, spec.alpha, spec.period, t - s);
  }
  return 0.0;
}

/// One-step-ahead conditional mean and standard deviation of Z_t.
struct Predictor {
  double mean = 0.0;
  double sd = 1.0;
};

/// Linear prediction rule: mean = sum_j weights[j] * z_{t-1-j}.
struct OneStepRule {
  std::vector<double> weights;
  double sd = 1.0;

  template <class History>
  double mean_from(const History& z, long t) const {
    // z is indexed by 1-based time through operator()(time).
    double m = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) m += weights[j] * z(t - 1 - static_cast<long>(j));
    return m;
  }
};

/// Innovations (Durbin-Levinson) recursion on a stationary autocorrelation
/// sequence rho(0..order). Returns the one-step rules for t = 1..order+1.
inline std::vector<OneStepRule> durbin_levinson_rules(std::span<const double> rho) {
  const std::size_t order = rho.size() - 1;
  std::vector<OneStepRule> rules;
  rules.reserve(order + 1);
  rules.push_back({{}, 1.0});
  std::vector<double> prev;  // phi_{n-1, 1..n-1}
  double v = rho[0];
  for (std::size_t n = 1; n <= order; ++n) {
    double num = rho[n];
    for (std::size_t j = 1; j < n; ++j) num -= prev[j - 1] * rho[n - j];
    const double phinn = num / v;
    std::vector<double> cur(n);
    for (std::size_t j = 1; j < n; ++j) cur[j - 1] = prev[j - 1] - phinn * prev[n - j - 1];
    cur[n - 1] = phinn;
    v *= (1.0 - phinn * phinn);
    rules.push_back({cur, std::sqrt(std::max(v, 0.0))});
    prev = std::move(cur);
  }
  return rules;
}

/// Precomputed prediction rules for a validated latent model.
/// Startup rules are exact conditional moments given z_1..z_{t-1}; after the
/// startup the (periodic) Markov recursion applies.
class PredictionPlan {
public:
  explicit PredictionPlan(const LatentSpec& spec) : period_(spec.period), kind_(spec.kind) {
    validate(spec);
    startup_.push_back({{}, 1.0});
    switch (spec.kind) {
      case LatentKind::WN:
        steady_.push_back({{}, 1.0});
        break;
      case LatentKind::AR1:
        steady_.push_back({{spec.phi}, std::sqrt(1.0 - spec.phi * spec.phi)});
        break;
      case LatentKind::PAR1:
        for (int s = 1; s <= period_; ++s) {
          const double p = spec.phi_curve(s);
          steady_.push_back({{p}, std::sqrt(1.0 - p * p)});
        }
        break;
      case LatentKind::SAR1: {
        const int T = period_;
        std::vector<double> rho(T + 1);
        for (int h = 0; h <= T; ++h) rho[h] = sar1_acf(spec.phi, spec.alpha, T, h);
        startup_ = durbin_levinson_rules(rho);  // t = 1..T+1
        // Z_t = alpha Z_{t-1} + phi Z_{t-T} - alpha phi Z_{t-T-1} + eps_t.
        std::vector<double> w(T + 1, 0.0);
        w[0] += spec.alpha;
        w[T - 1] += spec.phi;
        w[T] -= spec.alpha * spec.phi;
        steady_.push_back({w, std::sqrt(sar1_innovation_variance(spec.phi, spec.alpha, T))});
        break;
      }
    }
  }

  /// Rule for 1-based time t.
  const OneStepRule& rule(long t) const {
    if (t < 1) throw DomainError("PredictionPlan::rule: t must be >= 1");
    if (t <= static_cast<long>(startup_.size())) return startup_[t - 1];
    if (kind_ == LatentKind::PAR1) return steady_[season_of(t, period_) - 1];
    return steady_[0];
  }

  /// Predictor of Z_t with t = history.size() + 1.
  Predictor predict(std::span<const double> history) const {
    const long t = static_cast<long>(history.size()) + 1;
    const auto& r = rule(t);
    const double mean = r.mean_from([&](long time) { return history[time - 1]; }, t);
    return {mean, r.sd};
  }

  /// Maximum lag any rule uses.
  std::size_t memory() const {
    std::size_t m = 0;
    for (const auto& r : startup_) m = std::max(m, r.weights.size());
    for (const auto& r : steady_) m = std::max(m, r.weights.size());
    return m;
  }

  int period() const { return period_; }

private:
  int period_;
  LatentKind kind_;
  std::vector<OneStepRule> startup_;
  std::vector<OneStepRule> steady_;
};

inline Predictor predict(const LatentSpec& spec, std::span<const double> history) {
  return PredictionPlan(spec).predict(history);
}

/// sd of the innovation driving Z_t (1-based t).
inline double innovation_sd(const LatentSpec& spec, long t) {
  validate(spec);
  switch (spec.kind) {
    case LatentKind::WN: return 1.0;
    case LatentKind::AR1: return std::sqrt(1.0 - spec.phi * spec.phi);
    case LatentKind::PAR1: {
      const double p = spec.phi_curve(season_of(t, spec.period));
      return std::sqrt(1.0 - p * p);
    }
    case LatentKind::SAR1:
      return std::sqrt(sar1_innovation_variance(spec.phi, spec.alpha, spec.period));
  }
  return 1.0;
}

/// Exact draw of z_1..z_n by chaining the one-step predictors.
inline std::vector<double> simulate_latent(const LatentSpec& spec, std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("simulate_latent: n must be >= 1");
  const PredictionPlan plan(spec);
  std::vector<double> z(n);
  auto at = [&](long time) { return z[time - 1]; };
  for (std::size_t i = 0; i < n; ++i) {
    const long t = static_cast<long>(i) + 1;
    const auto& r = plan.rule(t);
    z[i] = r.mean_from(at, t) + r.sd * rng.normal();
  }
  return z;
}

inline std::vector<double> simulate_latent(const LatentSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_latent(spec, n, rng);
}

}  // namespace pcount
