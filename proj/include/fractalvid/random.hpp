#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace fvid {

/// SplitMix64 finalizer. Used to derive independent seeds from (seed, index)
/// pairs so that any job can be regenerated without replaying the others.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Salts for seeds that must not collide with per-index derivations.
inline constexpr std::uint64_t kViewportSalt = 0x7669657770727400ULL;
inline constexpr std::uint64_t kMutationSalt = 0x6d75746174650000ULL;

/// Seeded generator with platform-independent distributions.
///
/// The std:: distributions are implementation-defined, so results would differ
/// between standard libraries. Every draw here is built from raw 64-bit engine
/// output, which the standard does pin down for mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], unbiased.
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    const std::uint64_t threshold = (0 - range) % range;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return lo + static_cast<int>(x % range);
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// -1 or +1 with equal probability.
  int sign() { return (engine_() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fvid
