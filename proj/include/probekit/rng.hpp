#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "probekit/math.hpp"

namespace probekit {

/// SplitMix64 (Steele, Lea, Flood). Constants:
///   increment  0x9E3779B97F4A7C15
///   mix 1      0xBF58476D1CE4E5B9 after xor-shift 30
///   mix 2      0x94D049BB133111EB after xor-shift 27, final xor-shift 31
/// Output is identical on every platform, which std distributions do not
/// guarantee.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). Lemire-free modulo; bias is < 2^-40 for
  /// the bounds used here.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  /// Uniform point in the closed unit ball by rejection.
  Vec3 in_unit_ball() {
    for (;;) {
      const Vec3 p{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
      if (dot(p, p) <= 1.0) return p;
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace probekit
