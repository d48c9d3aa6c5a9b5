#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace exmap {

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine used everywhere randomness enters the pipeline.
using Engine = std::mt19937_64;

/// Uniform double in the open interval (0, 1), built from the top 53 bits so
/// the value does not depend on the standard library's distribution code.
inline double uniform_open01(Engine& eng) {
  const std::uint64_t bits = eng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw (Box-Muller on uniform_open01), reproducible across
/// standard library implementations.
inline double standard_normal(Engine& eng) {
  const double u1 = uniform_open01(eng);
  const double u2 = uniform_open01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Engine for an independent substream keyed by (seed, key, sub).
inline Engine substream(std::uint64_t seed, std::string_view key, std::uint64_t sub = 0) {
  const std::uint64_t k = splitmix64(seed ^ splitmix64(fnv1a64(key) ^ splitmix64(sub)));
  return Engine(k);
}

}  // namespace exmap
