#include "symkry/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "symkry/rng.hpp"

namespace symkry::synth {

namespace {

// First `take` elements of a Fisher-Yates shuffle over `pool`.
std::vector<int> draw_positions(std::vector<int> pool, int take, rng::Xoshiro256pp& gen) {
  const int n = static_cast<int>(pool.size());
  for (int i = 0; i < take; ++i) {
    const int j = i + static_cast<int>(gen.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(take));
  return pool;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::PSD: return "psd";
    case Family::Indefinite: return "indefinite";
    case Family::SlightlyIndefinite: return "slightly_indefinite";
  }
  throw std::logic_error("family_name: bad enum value");
}

Family family_from_name(const std::string& name) {
  if (name == "psd") return Family::PSD;
  if (name == "indefinite") return Family::Indefinite;
  if (name == "slightly_indefinite") return Family::SlightlyIndefinite;
  throw std::invalid_argument("unknown spectrum family '" + name + "'");
}

DiagonalOperator gen_matrix(const SynthSpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("gen_matrix: d must be >= 1");
  if (spec.m < 0 || spec.m >= spec.d)
    throw std::invalid_argument("gen_matrix: need 0 <= m < d");

  const int d = spec.d;
  const int m = spec.m;
  Vec diag(static_cast<std::size_t>(d));

  rng::Xoshiro256pp entries(spec.seed, kStreamEntries);
  const bool gaussian = (spec.family == Family::Indefinite);
  for (auto& v : diag) v = gaussian ? entries.normal() : entries.uniform_oc();

  std::vector<int> zeroed;
  if (m > 0) {
    rng::Xoshiro256pp zeros(spec.seed, kStreamZeros);
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    zeroed = draw_positions(std::move(all), m, zeros);
    for (int i : zeroed) diag[static_cast<std::size_t>(i)] = 0.0;
  }

  if (spec.family == Family::SlightlyIndefinite) {
    // Grade of (A, dense b): the d - m distinct nonzero entries plus the zero
    // eigenvalue when m >= 1.
    const int g = (m >= 1) ? d - m + 1 : d;
    const int flips = static_cast<int>(std::ceil(0.1 * g));
    std::vector<int> nonzero;
    nonzero.reserve(static_cast<std::size_t>(d - m));
    std::vector<bool> is_zero(static_cast<std::size_t>(d), false);
    for (int i : zeroed) is_zero[static_cast<std::size_t>(i)] = true;
    for (int i = 0; i < d; ++i)
      if (!is_zero[static_cast<std::size_t>(i)]) nonzero.push_back(i);
    if (flips > static_cast<int>(nonzero.size()))
      throw std::invalid_argument("gen_matrix: fewer nonzero entries than sign flips");
    rng::Xoshiro256pp fl(spec.seed, kStreamFlips);
    for (int i : draw_positions(std::move(nonzero), flips, fl))
      diag[static_cast<std::size_t>(i)] = -diag[static_cast<std::size_t>(i)];
  }

  return DiagonalOperator(std::move(diag));
}

Vec gen_rhs(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("gen_rhs: d must be >= 1");
  rng::Xoshiro256pp gen(seed, kStreamRhs);
  Vec b(static_cast<std::size_t>(d));
  for (auto& v : b) v = gen.normal();
  return b;
}

std::string to_json(const SynthSpec& spec) {
  nlohmann::json j;
  j["d"] = spec.d;
  j["m"] = spec.m;
  j["family"] = family_name(spec.family);
  j["seed"] = spec.seed;
  return j.dump();
}

SynthSpec spec_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SynthSpec s;
  s.d = j.at("d").get<int>();
  s.m = j.at("m").get<int>();
  s.family = family_from_name(j.at("family").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace symkry::synth
