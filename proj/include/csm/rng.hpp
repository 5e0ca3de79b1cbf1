#pragma once

#include <cmath>
#include <cstdint>

namespace csm {

// Counter-based PRNG used everywhere randomness is needed, so that simulated
// datasets reproduce bit-exactly across runs and platforms.
//
// The generator is SplitMix64 viewed as a counter scheme: output i is
//   finalize(seed + (i+1) * kGamma)
// with the standard 30/27/31 xor-shift finalizer. Jumping and substream
// derivation are O(1).
//
// Normal deviates use Box-Muller. Each pair (u1, u2) of uniforms produces
//   z0 = r cos(2*pi*u2),  z1 = r sin(2*pi*u2),  r = sqrt(-2 log(1 - u1)),
// returned in the order z0 then z1 (z1 is cached). Callers that interleave
// uniform and normal draws get a deterministic, documented stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return finalize(seed_ + (++counter_) * kGamma); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Integer in [0, n) by scaled multiply; n must be > 0 and small relative to
  // 2^53 (always true here).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
  }

  // Independent substream: a fresh generator whose seed is decorrelated from
  // this one's by two finalizer passes. Used to give each Monte Carlo trial
  // its own stream regardless of scheduling.
  Rng derive(std::uint64_t stream) const {
    return Rng(finalize(finalize(seed_ ^ 0x3C6EF372FE94F82AULL) + stream));
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace csm
