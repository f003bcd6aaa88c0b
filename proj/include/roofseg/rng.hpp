#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace roofseg {

// std::mt19937_64 is fully specified by the standard, but the distribution
// adaptors are not. Everything below draws from the raw engine so that
// identical seeds give identical streams on every standard library.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed, e.g. one per superpoint or sample.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

/// Uniform double in [0, 1).
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_real(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Unbiased uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % n;
  const std::uint64_t bound = std::numeric_limits<std::uint64_t>::max() - rem;
  std::uint64_t x = gen();
  while (x >= bound) x = gen();
  return x % n;
}

/// Fisher-Yates shuffle driven by the raw engine.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(gen, i)]);
  }
}

}  // namespace roofseg
