#pragma once

#include "pcount/count_law.hpp"
#include "pcount/errors.hpp"
#include "pcount/fourier.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"
#include "pcount/normal.hpp"
#include "pcount/random.hpp"

#include <cstdint>
#include <vector>

namespace pcount {

/// Observed or simulated counts x_1..x_n with their period.
struct CountSeries {
  std::vector<long> x;
  int period = 1;

  std::size_t size() const { return x.size(); }
  /// 1-based access.
  long at(long t) const { return x.at(static_cast<std::size_t>(t - 1)); }
  int season(long t) const { return season_of(t, period); }
};

/// F^{-1}(Phi(z)). The upper half uses the tail mass Phi(-z) so that large z
/// does not collapse onto u = 1.
inline long transform(const CountLaw& law, double z) {
  if (!std::isfinite(z)) throw DomainError("transform: z must be finite");
  if (z <= 0.0) return law.quantile(norm_cdf(z));
  return law.quantile_upper(norm_cdf(-z));
}

inline long transform(const MarginalSpec& spec, int season, double z) {
  return transform(spec.law(season), z);
}

/// X_t = F_{s(t)}^{-1}(Phi(Z_t)) for a simulated latent path.
inline CountSeries simulate_counts(const MarginalSpec& marginal, const LatentSpec& latent,
                                   std::size_t n, std::uint64_t seed) {
  if (marginal.period != latent.period)
    throw InvalidParameter("marginal and latent periods differ");
  const auto laws = marginal.laws();
  Rng rng(seed);
  const auto z = simulate_latent(latent, n, rng);
  CountSeries out;
  out.period = marginal.period;
  out.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long t = static_cast<long>(i) + 1;
    out.x[i] = transform(laws[season_of(t, marginal.period) - 1], z[i]);
  }
  return out;
}

}  // namespace pcount
