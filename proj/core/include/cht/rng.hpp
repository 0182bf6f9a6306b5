#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace cht {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Pseudo-random stream with platform-independent helpers for uniform draws.
///
/// The engine is std::mt19937_64; the conversions below are spelled out so that
/// the same seed yields the same sequence regardless of the standard library.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Stream keyed by (seed, layer, step); independent of evaluation order.
  static Rng stream(std::uint64_t seed, std::uint64_t layer, std::uint64_t step) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ (layer + 0x632be59bd9b4e019ULL));
    key = splitmix64(key ^ (step + 0x8cb92ba72f3d8dd7ULL));
    return Rng(key);
  }

  static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1); safe to take the logarithm of.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n > 0; rejection sampling avoids modulo bias.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cht
