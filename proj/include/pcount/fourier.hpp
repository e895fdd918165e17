#pragma once

#include "pcount/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pcount {

/// Season of a 1-based time index: ((t - 1) mod T) + 1.
inline int season_of(long t, int period) {
  if (t < 1 || period < 1) throw DomainError("season_of: need t >= 1 and T >= 1");
  return static_cast<int>((t - 1) % period) + 1;
}

/// Wraps a phase into [0, T).
inline double wrap_phase(double phase, int period) {
  double p = std::fmod(phase, static_cast<double>(period));
  if (p < 0.0) p += period;
  // fmod can return exactly T for tiny negative inputs after the shift.
  if (p >= period) p = 0.0;
  return p;
}

/// First-order cosine curve over the seasons 1..T:
///   value(nu) = level + amplitude * cos(2*pi*(nu - phase) / T).
struct FourierCurve {
  double level = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  int period = 1;

  FourierCurve() = default;
  FourierCurve(double level_, double amplitude_, double phase_, int period_)
      : level(level_), amplitude(amplitude_), period(period_) {
    if (period_ < 1) throw InvalidParameter("FourierCurve: period must be >= 1");
    phase = wrap_phase(phase_, period_);
  }

  /// Constant curve (zero amplitude).
  static FourierCurve constant(double level, int period) {
    return FourierCurve(level, 0.0, 0.0, period);
  }

  double operator()(int season) const {
    if (season < 1 || season > period)
      throw DomainError("FourierCurve: season " + std::to_string(season) +
                        " outside 1.." + std::to_string(period));
    return level + amplitude * std::cos(2.0 * std::numbers::pi * (season - phase) / period);
  }

  double min_value() const {
    double m = (*this)(1);
    for (int s = 2; s <= period; ++s) m = std::min(m, (*this)(s));
    return m;
  }
  double max_value() const {
    double m = (*this)(1);
    for (int s = 2; s <= period; ++s) m = std::max(m, (*this)(s));
    return m;
  }
};

}  // namespace pcount
