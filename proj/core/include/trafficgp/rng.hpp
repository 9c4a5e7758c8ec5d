#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace trafficgp {

// All randomness flows through mt19937_64 plus the explicit mappings below.
// std::uniform_*_distribution are implementation-defined, so they are avoided:
// identical seeds must give identical streams on every platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Order-sensitive hash chain for deriving independent substreams from a master
// seed (e.g. one stream per cluster pair).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1).
inline double uniform_double(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform double in [0, s).
inline double uniform_double(Rng& g, double s) { return uniform_double(g) * s; }

// Unbiased uniform integer in [0, n), n >= 1 (rejection sampling).
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x > limit);
  return x % n;
}

// Standard normal via Box-Muller (deterministic, no state carried over).
inline double normal_double(Rng& g) {
  double u1 = uniform_double(g);
  while (u1 <= 0.0) u1 = uniform_double(g);
  const double u2 = uniform_double(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

// k distinct indices drawn uniformly from [0, n), in draw order
// (partial Fisher-Yates).
std::vector<std::size_t> inline sample_indices(std::size_t n, std::size_t k, Rng& g) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(g, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace trafficgp
