#pragma once

#include <cstdint>
#include <random>

namespace rigidhom {

/// Realization key of an environment: identical keys give identical environments.
struct EnvSeed {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;

  friend bool operator==(const EnvSeed &, const EnvSeed &) = default;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based draw: a pure function of (seed, stream, i, j).
inline constexpr std::uint64_t counter_hash(EnvSeed s, std::int64_t i, std::int64_t j) {
  std::uint64_t h = splitmix64(s.seed ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(s.stream));
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(j) * 0xd1342543de82ef95ULL));
  return h;
}

/// Sequential engine for solvers; seeded from an EnvSeed so runs are reproducible.
inline std::mt19937_64 make_engine(EnvSeed s) {
  return std::mt19937_64(splitmix64(s.seed) ^ splitmix64(0xabcdefULL + s.stream));
}

/// Uniform double in [0,1) from the top 53 bits. Used instead of
/// std::uniform_real_distribution, whose output is implementation-defined.
inline double uniform01(std::mt19937_64 &g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64 &g, std::size_t n) {
  return static_cast<std::size_t>(uniform01(g) * static_cast<double>(n)) % n;
}

} // namespace rigidhom
