#pragma once

// Seeded random number generation for the problem generators.
//
// The generator is xoshiro256++ (Blackman & Vigna), state-initialized with a
// SplitMix64 chain.  Both are fixed public algorithms, so a (seed, stream)
// pair produces the same bytes on every platform; std::mt19937 plus the
// standard <random> distributions would not give that guarantee, which is why
// the uniform and normal transforms are spelled out here as well.
//
// Stream splitting: substream `t` of seed `s` starts the SplitMix64 chain at
// s + (t + 1) * 0x9E3779B97F4A7C15.  Consumers assign a distinct stream tag
// per purpose so that, e.g., matrix entries and right-hand sides drawn from
// the same seed are decorrelated.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace symkry::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += kGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

class Xoshiro256pp {
 public:
  Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 sm{seed + (stream + 1) * kGamma};
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = kGamma;  // all-zero state is invalid
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1]: top 53 bits, shifted into (0,1] so that log() is safe.
  double uniform_oc() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch only, so one draw consumes
  // exactly two uniforms and the stream position stays easy to reason about).
  double normal() {
    const double u1 = uniform_oc();
    const double u2 = uniform_oc();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Integer in [0, n).  Plain modulo; the bias is ~n/2^64 which is irrelevant
  // for experiment sampling and keeps the draw count per call fixed at one.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Xoshiro256pp::below: n must be positive");
    return next() % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_;
};

}  // namespace symkry::rng
