#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fsrl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based seed derivation: the seed of a stream depends only on the
// master seed and the path of counters leading to it, so adding seeds or
// components never perturbs the streams that already exist.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t c : path) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master,
                    std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

// Stream identifiers for derive_seed paths.
namespace stream {
inline constexpr std::uint64_t kEnvironment = 1;
inline constexpr std::uint64_t kAgent = 2;
inline constexpr std::uint64_t kModel = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kBandit = 5;
inline constexpr std::uint64_t kAliasing = 6;
inline constexpr std::uint64_t kEvaluation = 7;
}  // namespace stream

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace fsrl
