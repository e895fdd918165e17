#pragma once

// Seasonal count marginals F_nu: Poisson, Binomial, truncated generalized
// Poisson and the two-state-Markov-chain (TSMC) weekly count law, each with
// first-order cosine curves over the seasons.

#include "pcount/count_law.hpp"
#include "pcount/errors.hpp"
#include "pcount/fourier.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace pcount {

/// Trials of the binomial, days of the TSMC week and top of the truncated
/// generalized Poisson support.
inline constexpr int kWeekLength = 7;

enum class Family { Poisson, Binomial, TruncGenPoisson, TSMC };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Poisson: return "poisson";
    case Family::Binomial: return "binomial";
    case Family::TruncGenPoisson: return "genpoisson";
    case Family::TSMC: return "tsmc";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  if (name == "poisson") return Family::Poisson;
  if (name == "binomial") return Family::Binomial;
  if (name == "genpoisson" || name == "truncated_genpoisson") return Family::TruncGenPoisson;
  if (name == "tsmc") return Family::TSMC;
  throw ConfigError("unknown marginal family '" + std::string(name) +
                    "' (expected poisson, binomial, genpoisson or tsmc)");
}

/// Names of the seasonal curves each family carries, in storage order.
inline std::vector<std::string> curve_names(Family f) {
  switch (f) {
    case Family::Poisson: return {"lambda"};
    case Family::Binomial: return {"p"};
    case Family::TruncGenPoisson: return {"mean", "variance"};
    case Family::TSMC: return {"alpha", "beta"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Family building blocks

inline std::vector<double> binomial_pmf(int trials, double p) {
  if (trials < 0) throw DomainError("binomial_pmf: trials must be >= 0");
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("binomial success probability must lie in (0,1)");
  std::vector<double> out(trials + 1);
  for (int k = 0; k <= trials; ++k) {
    const double log_choose =
        std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
    out[k] = std::exp(log_choose + k * std::log(p) + (trials - k) * std::log1p(-p));
  }
  return out;
}

/// Stationary law (P[dry], P[wet]) of the two-state chain with
/// Q = [[alpha, 1-alpha], [1-beta, beta]] (state 0 = dry, 1 = wet).
inline std::array<double, 2> tsmc_stationary(double alpha, double beta) {
  const double denom = 2.0 - alpha - beta;
  if (!(denom > 0.0)) throw DomainError("tsmc: alpha + beta = 2 has no unique stationary law");
  return {(1.0 - beta) / denom, (1.0 - alpha) / denom};
}

/// Law of the number of wet days among days 1..L of the chain started from
/// its stationary law at day 0. Built by recursing on the week length with
/// P_s(k) = P[sum_{t=1}^{L} M_t = k | M_0 = s].
inline std::vector<double> tsmc_pmf(double alpha, double beta, int length = kWeekLength) {
  if (length < 1) throw DomainError("tsmc_pmf: week length must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw InvalidParameter("tsmc transition probabilities must lie in (0,1)");
  const auto pi = tsmc_stationary(alpha, beta);

  // One-day week.
  std::vector<double> p0{alpha, 1.0 - alpha};
  std::vector<double> p1{1.0 - beta, beta};
  for (int len = 2; len <= length; ++len) {
    std::vector<double> n0(len + 1, 0.0), n1(len + 1, 0.0);
    for (int k = 0; k <= len; ++k) {
      // Day 1 dry: k wet days remain for the chain restarted in state 0.
      const double dry_first = k < len ? p0[k] : 0.0;
      const double wet_first = k >= 1 ? p1[k - 1] : 0.0;
      n0[k] = (1.0 - alpha) * wet_first + alpha * dry_first;
      n1[k] = beta * wet_first + (1.0 - beta) * dry_first;
    }
    p0 = std::move(n0);
    p1 = std::move(n1);
  }
  std::vector<double> out(length + 1);
  for (int k = 0; k <= length; ++k) out[k] = pi[0] * p0[k] + pi[1] * p1[k];
  return out;
}

/// Generalized Poisson pmf e^{-(lambda + eta k)} lambda (lambda + eta k)^{k-1} / k!.
inline double genpoisson_pmf(double lambda, double eta, long k) {
  if (k < 0) return 0.0;
  const double r = lambda + eta * k;
  return std::exp(std::log(lambda) + (k - 1) * std::log(r) - r - std::lgamma(k + 1.0));
}

struct GenPoissonParams {
  double lambda;
  double eta;
};

/// Inverts E(Y) = lambda/(1-eta), Var(Y) = lambda/(1-eta)^3.
inline GenPoissonParams genpoisson_from_moments(double mean, double variance) {
  if (!(mean > 0.0)) throw DomainError("generalized Poisson mean must be positive");
  if (!(variance >= mean))
    throw DomainError("generalized Poisson cannot be underdispersed (variance < mean)");
  const double ratio = std::sqrt(mean / variance);
  return {mean * ratio, 1.0 - ratio};
}

/// Generalized Poisson with the given (untruncated) moments, restricted to
/// {0..top} and renormalized.
inline std::vector<double> truncated_genpoisson_pmf(double mean, double variance,
                                                    int top = kWeekLength) {
  const auto gp = genpoisson_from_moments(mean, variance);
  std::vector<double> out(top + 1);
  double total = 0.0;
  for (int k = 0; k <= top; ++k) total += out[k] = genpoisson_pmf(gp.lambda, gp.eta, k);
  for (double& v : out) v /= total;
  return out;
}

// ---------------------------------------------------------------------------

/// A seasonal marginal family with its cosine curves (see curve_names()).
struct MarginalSpec {
  Family family = Family::Poisson;
  int period = 1;
  std::vector<FourierCurve> curves;

  MarginalSpec() = default;
  MarginalSpec(Family f, int T, std::vector<FourierCurve> c)
      : family(f), period(T), curves(std::move(c)) {
    if (T < 1) throw InvalidParameter("period must be >= 1");
    if (curves.size() != curve_names(f).size())
      throw InvalidParameter(std::string(to_string(f)) + " marginal needs " +
                             std::to_string(curve_names(f).size()) + " curve(s)");
    for (const auto& c : curves)
      if (c.period != T) throw InvalidParameter("curve period differs from marginal period");
  }

  static MarginalSpec poisson(FourierCurve lambda) {
    return {Family::Poisson, lambda.period, {lambda}};
  }
  static MarginalSpec binomial(FourierCurve p) { return {Family::Binomial, p.period, {p}}; }
  static MarginalSpec genpoisson(FourierCurve mean, FourierCurve variance) {
    return {Family::TruncGenPoisson, mean.period, {mean, variance}};
  }
  static MarginalSpec tsmc(FourierCurve alpha, FourierCurve beta) {
    return {Family::TSMC, alpha.period, {alpha, beta}};
  }

  /// The count law of season nu; throws InvalidParameter naming the season
  /// when the curves leave the family's parameter space there.
  CountLaw law(int season) const {
    auto bad = [&](const std::string& what) {
      return InvalidParameter(std::string(to_string(family)) + " marginal, season " +
                              std::to_string(season) + ": " + what);
    };
    switch (family) {
      case Family::Poisson: {
        const double lambda = curves[0](season);
        if (!(lambda > 0.0)) throw bad("lambda must be positive");
        return CountLaw::poisson(lambda);
      }
      case Family::Binomial: {
        const double p = curves[0](season);
        if (!(p > 0.0 && p < 1.0)) throw bad("p must lie in (0,1)");
        return CountLaw::from_pmf(binomial_pmf(kWeekLength, p));
      }
      case Family::TruncGenPoisson: {
        const double mu = curves[0](season);
        const double var = curves[1](season);
        if (!(mu > 0.0)) throw bad("mean must be positive");
        if (!(var >= mu)) throw bad("variance must be >= mean");
        return CountLaw::from_pmf(truncated_genpoisson_pmf(mu, var));
      }
      case Family::TSMC: {
        const double a = curves[0](season);
        const double b = curves[1](season);
        if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0))
          throw bad("alpha and beta must lie in (0,1)");
        return CountLaw::from_pmf(tsmc_pmf(a, b));
      }
    }
    throw bad("unknown family");
  }

  /// Laws for seasons 1..T (index nu - 1).
  std::vector<CountLaw> laws() const {
    std::vector<CountLaw> out;
    out.reserve(period);
    for (int s = 1; s <= period; ++s) out.push_back(law(s));
    return out;
  }

  void validate() const { (void)laws(); }

  double pmf(int season, long k) const { return law(season).pmf(k); }
  double cdf(int season, long j) const { return law(season).cdf(j); }
  long quantile(int season, double u) const { return law(season).quantile(u); }
};

}  // namespace pcount
