#pragma once

// Seed derivation and portable sampling primitives.
//
// Every stochastic operation in the library takes an explicit 64-bit seed.
// Sub-seeds are derived with splitmix64 so results never depend on call
// order across threads, and the helpers below avoid the <random>
// distributions whose algorithms differ between standard libraries.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>

namespace fastergts {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a parent seed with any number of stream labels.
inline Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = splitmix64(parent);
  for (std::uint64_t label : labels) {
    h = splitmix64(h ^ splitmix64(label + 0x632be59bd9b4e019ULL));
  }
  return h;
}

inline Rng make_rng(Seed seed) { return Rng(splitmix64(seed)); }

/// Uniform double in [0, 1) built from the top 53 bits.
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return static_cast<std::size_t>(r % bound);
}

inline bool bernoulli(Rng& rng, double p) { return unit_uniform(rng) < p; }

/// Draws an index with probability proportional to weights (need not be
/// normalized). Weights must be non-negative with a positive sum.
inline std::size_t sample_weighted(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("sample_weighted: zero mass");
  const double u = unit_uniform(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace fastergts
