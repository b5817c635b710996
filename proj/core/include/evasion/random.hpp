#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace evasion {

// All sampling goes through these helpers instead of <random>
// distributions, whose output is implementation-defined. This keeps runs
// reproducible across standard libraries.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for (master, stage, index). Stages seeded this way are
/// reproducible independently of each other and of execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master ^ fnv1a64(stage));
  return splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Calls fn(i) for each i in [0, n) selected independently with
/// probability p. Uses geometric skips so the cost is proportional to the
/// number of hits rather than n.
template <typename Fn>
void for_each_bernoulli(std::size_t n, double p, Rng& rng, Fn&& fn) {
  if (p <= 0.0 || n == 0) return;
  if (p >= 1.0) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const double log_q = std::log1p(-p);
  std::size_t i = 0;
  while (true) {
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    const double skip = std::floor(std::log(u) / log_q);
    if (skip >= static_cast<double>(n - i)) return;
    i += static_cast<std::size_t>(skip);
    fn(i);
    if (++i >= n) return;
  }
}

template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    const auto j = static_cast<decltype(i)>(
        uniform_index(rng, static_cast<std::uint64_t>(i + 1)));
    using std::swap;
    swap(first[i], first[j]);
  }
}

}  // namespace evasion
