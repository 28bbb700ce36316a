#pragma once

// Seed derivation and a few distribution helpers with fixed, portable
// arithmetic (std:: distributions differ between standard libraries).

#include <cmath>
#include <cstdint>
#include <random>

namespace probemine::rnd {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (master, a, b).
inline std::uint64_t derive(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

using Engine = std::mt19937_64;

/// Uniform in [0, n) by rejection; n > 0.
inline std::uint64_t below(Engine& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Uniform in [0, 1).
inline double unit(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

inline bool bernoulli(Engine& rng, double p) { return unit(rng) < p; }

/// Standard normal via Box-Muller.
inline double normal(Engine& rng) {
  double u1 = unit(rng);
  while (u1 <= 0.0) u1 = unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Normal(mean, sigma) truncated to mean +- 3 sigma by resampling.
inline double truncated_normal(Engine& rng, double mean, double sigma) {
  if (sigma <= 0) return mean;
  while (true) {
    const double z = normal(rng);
    if (std::abs(z) <= 3.0) return mean + sigma * z;
  }
}

}  // namespace probemine::rnd
