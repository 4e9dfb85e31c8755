#pragma once

// Seeded diagonal test-problem generators.  Three spectrum families cover the
// regimes the solvers distinguish: nonnegative (PSD), sign-free (Indefinite)
// and nonnegative with a few flipped entries (SlightlyIndefinite).  All
// sampling is bit-reproducible across platforms; see rng.hpp.

#include <cstdint>
#include <string>

#include "symkry/linops.hpp"
#include "symkry/vec.hpp"

namespace symkry::synth {

enum class Family { PSD, Indefinite, SlightlyIndefinite };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct SynthSpec {
  int d = 0;            // dimension
  int m = 0;            // number of exactly-zero diagonal entries (0 <= m < d)
  Family family = Family::PSD;
  std::uint64_t seed = 0;
};

// Substream tags for a given seed.  gen_rhs draws from kStreamRhs, so matrix
// and right-hand side built from the same seed are decorrelated.
inline constexpr std::uint64_t kStreamEntries = 0;
inline constexpr std::uint64_t kStreamZeros = 1;
inline constexpr std::uint64_t kStreamFlips = 2;
inline constexpr std::uint64_t kStreamRhs = 3;

// Diagonal with d entries, m of them zeroed at random positions.
//   PSD:                uniform (0, 1] entries
//   Indefinite:         standard normal entries
//   SlightlyIndefinite: uniform (0, 1] entries, then ceil(0.1 * g) sign flips
//                       among the nonzero positions, where g = d - m + 1 when
//                       m >= 1 and g = d otherwise (the grade of the system
//                       this diagonal forms with a dense right-hand side).
DiagonalOperator gen_matrix(const SynthSpec& spec);

// Standard normal right-hand side of length d.
Vec gen_rhs(int d, std::uint64_t seed);

std::string to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const std::string& text);

}  // namespace symkry::synth
