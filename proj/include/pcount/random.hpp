#pragma once

#include "pcount/normal.hpp"

#include <cstdint>

namespace pcount {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Maps 64 random bits to the open interval (0, 1).
inline double bits_to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Small sequential generator (SplitMix64 stream). Fully specified, so the
/// same seed produces the same stream on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x5DEECE66DULL)) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return bits_to_open_unit(next()); }

  double normal() { return norm_quantile(uniform()); }

private:
  std::uint64_t state_;
};

/// Common-random-number grid: u(t, k) is a pure function of (seed, t, k), so
/// the GHK estimate is a deterministic, continuous function of the model
/// parameters for a fixed seed.
class CrnGrid {
public:
  explicit CrnGrid(std::uint64_t seed) : key_(splitmix64(seed)) {}

  double operator()(std::uint64_t t, std::uint64_t k) const {
    std::uint64_t h = splitmix64(key_ ^ splitmix64(t * 0xD1B54A32D192ED03ULL));
    h = splitmix64(h ^ (k * 0xABC98388FB8FAC03ULL));
    return bits_to_open_unit(h);
  }

private:
  std::uint64_t key_;
};

}  // namespace pcount
