#pragma once

#include <cstdint>
#include <random>

namespace linbet {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent seeds from a root seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed-splitting rule: child = mix64(mix64(parent) ^ mix64(index + golden)).
/// Repetition seeds are derive_seed(root, rep); per-round noise seeds are
/// derive_seed(rep_seed, round).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Distinct salts so instance generation and noise never share a stream.
inline constexpr std::uint64_t kInstanceSalt = 0x1d5a'0c7e'0000'0001ULL;
inline constexpr std::uint64_t kRepetitionSalt = 0x2e6b'1d8f'0000'0002ULL;

inline Rng instance_rng(std::uint64_t seed) { return Rng(derive_seed(seed, kInstanceSalt)); }

inline std::uint64_t repetition_seed(std::uint64_t root_seed, std::uint64_t rep) noexcept {
  return derive_seed(derive_seed(root_seed, kRepetitionSalt), rep);
}

inline Rng round_rng(std::uint64_t rep_seed, std::uint64_t round) {
  return Rng(derive_seed(rep_seed, round));
}

}  // namespace linbet
