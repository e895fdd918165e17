#pragma once

#include "pcount/errors.hpp"
#include "pcount/normal.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pcount {

/// A count distribution on {0, 1, ...}: either Poisson (infinite support,
/// evaluated through regularized incomplete gamma functions) or an explicit
/// finite pmf table. Immutable after construction.
class CountLaw {
public:
  static CountLaw poisson(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw InvalidParameter("Poisson rate must be positive and finite, got " +
                             std::to_string(lambda));
    CountLaw law;
    law.lambda_ = lambda;
    return law;
  }

  /// Finite-support law from (unnormalized, nonnegative) masses on 0..size-1.
  static CountLaw from_pmf(std::vector<double> masses) {
    if (masses.empty()) throw InvalidParameter("empty pmf table");
    double total = 0.0;
    for (double m : masses) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidParameter("pmf entries must be finite and >= 0");
      total += m;
    }
    if (!(total > 0.0)) throw InvalidParameter("pmf table has zero total mass");
    CountLaw law;
    law.pmf_ = std::move(masses);
    for (double& m : law.pmf_) m /= total;
    const std::size_t size = law.pmf_.size();
    law.cdf_.resize(size);
    law.sf_.resize(size);
    double acc = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
      acc += law.pmf_[k];
      law.cdf_[k] = acc;
    }
    law.cdf_.back() = 1.0;
    acc = 0.0;
    for (std::size_t k = size; k-- > 0;) {
      law.sf_[k] = acc;
      acc += law.pmf_[k];
    }
    return law;
  }

  bool is_finite() const { return !pmf_.empty(); }
  bool is_poisson() const { return pmf_.empty(); }
  double rate() const { return lambda_; }

  /// Largest support point of a finite law.
  std::optional<long> support_max() const {
    if (is_finite()) return static_cast<long>(pmf_.size()) - 1;
    return std::nullopt;
  }

  double pmf(long k) const {
    if (k < 0) return 0.0;
    if (is_finite()) return k < static_cast<long>(pmf_.size()) ? pmf_[k] : 0.0;
    return std::exp(k * std::log(lambda_) - lambda_ - std::lgamma(k + 1.0));
  }

  /// C_j = P[X <= j]; C_{-1} = 0.
  double cdf(long j) const {
    if (j < 0) return 0.0;
    if (is_finite()) return j < static_cast<long>(cdf_.size()) ? cdf_[j] : 1.0;
    return boost::math::gamma_q(static_cast<double>(j) + 1.0, lambda_);
  }

  /// P[X > j], accurate in the upper tail.
  double sf(long j) const {
    if (j < 0) return 1.0;
    if (is_finite()) return j < static_cast<long>(sf_.size()) ? sf_[j] : 0.0;
    return boost::math::gamma_p(static_cast<double>(j) + 1.0, lambda_);
  }

  /// Phi^{-1}(C_j), with -inf for j < 0 and +inf where C_j = 1. Uses the
  /// upper-tail mass when C_j > 1/2 to keep relative precision.
  double probit_cdf(long j) const {
    if (j < 0) return -kInf;
    const double c = cdf(j);
    if (c <= 0.5) return norm_quantile(c);
    const double s = sf(j);
    if (s <= 0.0) return kInf;
    return norm_quantile_upper(s);
  }

  /// inf{x : F(x) >= u}.
  long quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile: u must lie in [0, 1]");
    if (is_finite()) {
      auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
      return static_cast<long>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                        static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    }
    long k = poisson_scan(u);
    while (k > 0 && cdf(k - 1) >= u) --k;
    while (cdf(k) < u) ++k;
    return k;
  }

  /// inf{x : P[X > x] <= q}; the quantile at 1 - q without forming 1 - q.
  long quantile_upper(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile_upper: q must lie in [0, 1]");
    if (is_finite()) {
      for (std::size_t k = 0; k < sf_.size(); ++k)
        if (sf_[k] <= q) return static_cast<long>(k);
      return static_cast<long>(sf_.size()) - 1;
    }
    long k = poisson_scan(1.0 - q);
    while (k > 0 && sf(k - 1) <= q) --k;
    while (sf(k) > q) ++k;
    return k;
  }

  double mean() const {
    if (is_poisson()) return lambda_;
    double m = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) m += k * pmf_[k];
    return m;
  }

  double variance() const {
    if (is_poisson()) return lambda_;
    const double m = mean();
    double v = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) v += (k - m) * (k - m) * pmf_[k];
    return v;
  }

  /// Smallest j with P[X > j] < eps (the top of the support for finite laws).
  long tail_cutoff(double eps) const {
    if (is_finite()) {
      for (std::size_t k = 0; k < sf_.size(); ++k)
        if (sf_[k] < eps) return static_cast<long>(k);
      return static_cast<long>(sf_.size()) - 1;
    }
    long j = static_cast<long>(lambda_);
    while (sf(j) >= eps) j += 1 + j / 8;
    while (j > 0 && sf(j - 1) < eps) --j;
    return j;
  }

private:
  CountLaw() = default;

  // Approximate quantile by pmf recursion; callers correct it with exact
  // cdf/sf evaluations.
  long poisson_scan(double u) const {
    double p = std::exp(-lambda_);
    if (p == 0.0) {
      // Rates large enough to underflow e^{-lambda}: start near the mean.
      return std::max(0L, static_cast<long>(lambda_ + norm_quantile(std::clamp(u, 1e-300, 1.0 - 1e-16)) *
                                                          std::sqrt(lambda_)));
    }
    double c = p;
    long k = 0;
    const long limit = static_cast<long>(lambda_ + 40.0 * std::sqrt(lambda_) + 100.0);
    while (c < u && k < limit) {
      ++k;
      p *= lambda_ / k;
      c += p;
    }
    return k;
  }

  double lambda_ = 0.0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::vector<double> sf_;
};

}  // namespace pcount
