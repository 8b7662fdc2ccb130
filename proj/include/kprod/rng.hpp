#pragma once

// Counter-based seeding. Every random quantity is a pure function of
// (seed, counter), so replicas and shifted streams never share state.

#include <cstdint>
#include <random>
#include <string_view>

namespace kprod {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_role(std::string_view role) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : role) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for replica `replica` playing `role` under `master`.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica,
                                           std::string_view role) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(replica)) ^ hash_role(role));
}

/// Uniform double in [0, 1) determined by (seed, counter).
inline constexpr double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
  const std::uint64_t bits = splitmix64(seed ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential generator for one-off use (test instances, permutations).
using Engine = std::mt19937_64;

inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace kprod
