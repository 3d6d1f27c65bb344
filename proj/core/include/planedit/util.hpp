#pragma once

// Shared utilities: seed derivation, portable random draws, hashing,
// summary statistics, and a slot-deterministic parallel map.
//
// All randomness in the project flows through mt19937_64 engines seeded via
// mix_seed so that independent subsystems never share a stream. Draw helpers
// are hand-rolled (inverse CDF, Box-Muller) because the std distributions are
// implementation-defined and would break byte-for-byte reproducibility.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace planedit {

using Rng = std::mt19937_64;

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

uint64_t fnv1a64(std::string_view bytes);

// Uniform in [0,1) with 53 bits of entropy.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, n); rejection keeps the draw exactly uniform.
inline uint64_t uniform_index(Rng& rng, uint64_t n) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max() / n * n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Standard normal via Box-Muller. One value per call; no cached state.
inline double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Fisher-Yates with our own index draws (std::shuffle is not portable).
template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

double mean_of(std::span<const double> xs);
double population_std(std::span<const double> xs);
bool all_finite(std::span<const double> xs);

struct TrendTest {
  double tau = 0.0;  // Kendall tau-b, tie-adjusted
  double z = 0.0;
  double p_one_sided = 1.0;  // P(trend this positive | no trend)
};

// Kendall trend test of xs against its own index order.
TrendTest kendall_trend(std::span<const double> xs);

// Runs fn(i) for i in [0, n). Each index owns its output slot, so results are
// identical for any worker count.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

}  // namespace planedit
