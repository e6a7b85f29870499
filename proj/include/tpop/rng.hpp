// Seeding and sampling helpers shared by the model and the simulator.
//
// Every stochastic task (one grid cell, one simulator run) gets its own
// generator whose seed is a pure function of the master seed and the task's
// coordinates, so results never depend on how work is scheduled.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tpop {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t step : path) s = splitmix64(s ^ splitmix64(step + 0x632BE59BD9B4E019ULL));
  return s;
}

/// Uniform on [0, 1) with 53 random bits; never returns 1.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Exact at the edges: p = 0 never fires, p = 1 always fires.
inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Uniform integer in [0, bound) by rejection, stable across standard libraries.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= limit) return r % bound;
  }
}

/// Fisher-Yates shuffle built on uniform_below.
template <typename Range>
void shuffle(Range& range, Rng& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(range.size());
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = uniform_below(rng, i);
    swap(range[i - 1], range[j]);
  }
}

}  // namespace tpop
