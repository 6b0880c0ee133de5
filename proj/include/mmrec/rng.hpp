#pragma once

// All randomness in the library comes from SplitMix64 (Steele, Lea & Flood,
// 2014). Streams are derived by hashing (seed, tag...) so any sub-stream can
// be reproduced without replaying the others. Bounded integers and normals
// are computed here instead of through <random> distributions, whose output
// is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace mmrec {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Combine a parent seed with one more key into a child seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           std::uint64_t key) noexcept {
  return splitmix64_mix(seed ^ splitmix64_mix(key + 0x9E3779B97F4A7C15ULL));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           std::string_view key) noexcept {
  return derive_seed(seed, fnv1a64(key));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t uniform_index(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - (max() % bound + 1) % bound;
    std::uint64_t x = (*this)();
    while (x > limit) x = (*this)();
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one draw per call; the pair's second
  /// half is discarded so each call consumes exactly two words).
  double normal() noexcept {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mmrec
