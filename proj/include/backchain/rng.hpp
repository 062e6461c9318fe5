#pragma once

// Portable seeded sampling. std::*_distribution output differs between
// standard libraries, so datasets would not be byte-identical across
// platforms; these helpers only rely on mt19937_64's specified sequence.

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace backchain::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for item `index` of a run seeded with `seed`.
inline Engine stream(std::uint64_t seed, std::uint64_t index) {
  return Engine(splitmix64(seed ^ splitmix64(index + 1)));
}

/// Uniform on [0, n). n must be positive.
inline std::uint64_t below(Engine& g, std::uint64_t n) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - kMax % n;
  std::uint64_t x;
  do x = g();
  while (x >= limit);
  return x % n;
}

/// Uniform on [lo, hi].
inline int between(Engine& g, int lo, int hi) {
  return lo + static_cast<int>(below(g, static_cast<std::uint64_t>(hi - lo) + 1));
}

/// Uniform on [0, 1).
inline double unit(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline bool chance(Engine& g, double p) { return unit(g) < p; }

template <class T>
void shuffle(Engine& g, std::vector<T>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[below(g, i)]);
  }
}

template <class T>
const T& pick(Engine& g, const std::vector<T>& items) {
  return items[below(g, items.size())];
}

}  // namespace backchain::rng
