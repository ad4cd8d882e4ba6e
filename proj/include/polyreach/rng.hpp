#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "polyreach/types.hpp"

namespace polyreach {

/// Counter-based random stream: the j-th output is a SplitMix64-style hash of
/// (key, j). Substreams are derived by hashing a path of integers into a new
/// key, so sampling stays reproducible no matter in which order particles,
/// trials or steps are drawn. All stochastic operations in this library take
/// an explicit stream; there is no global generator.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x6A09E667F3BCC909ull)) {}

  /// Independent stream addressed by (a, b) under this stream's key.
  RngStream substream(std::uint64_t a, std::uint64_t b = 0) const {
    std::uint64_t h = key_;
    h = mix(h ^ mix(a + 0x9E3779B97F4A7C15ull));
    h = mix(h ^ mix(b + 0xC2B2AE3D27D4EB4Full));
    return RngStream(FromKey{}, h);
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normal_vector(Index n) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  /// Unbiased uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace polyreach
