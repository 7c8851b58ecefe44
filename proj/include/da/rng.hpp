#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace da {

/// Deterministic PRNG used everywhere randomness is needed, so that splits,
/// initializations and training trajectories are reproducible across builds
/// and across reimplementations in other languages.
///
/// Algorithm (version 1, frozen):
///   - seeding: one round of splitmix64 over the user seed,
///     constants 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB;
///   - stream:  xorshift64* — x ^= x>>12; x ^= x<<25; x ^= x>>27;
///     output x * 0x2545F4914F6CDD1D;
///   - doubles: top 53 bits mapped to [0, 1);
///   - gaussians: basic Box-Muller, sqrt(-2 ln u1) * cos(2 pi u2), no caching;
///   - bounded ints: next_u64() % n;
///   - shuffles: Fisher-Yates from the back.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;  // xorshift state must be nonzero
  }

  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal deviate.
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1], keeps the log finite
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derives an independent stream seed, e.g. per split index or per class.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
};

}  // namespace da
