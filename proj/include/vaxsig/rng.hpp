#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vaxsig {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Engine for the k-th substream of a run-level seed. Parallel loops seed by
// index, so results do not depend on thread count or schedule.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t k) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(k + 1)));
}

// Unbiased draw in [0, n) by rejection; avoids the implementation-defined
// mapping of std::uniform_int_distribution.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

template <class T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  fisher_yates(perm, rng);
  return perm;
}

}  // namespace vaxsig
