#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace samosa {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a path of tags,
/// e.g. derive_seed(seed, {round, stream::kInit}).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t tag : path) s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return s;
}

namespace stream {
inline constexpr std::uint64_t kPool = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kTarget = 5;
inline constexpr std::uint64_t kOracle = 6;
inline constexpr std::uint64_t kQuery = 7;
inline constexpr std::uint64_t kEnsemble = 8;
}  // namespace stream

}  // namespace samosa
