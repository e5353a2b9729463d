#pragma once

#include <cstdint>

namespace optoskin {

/// splitmix64 finalizer; a stateless mixing function used to derive
/// independent RNG keys from (seed, stream, counter) tuples.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }
constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix_key(mix_key(a, b), c); }

/// Uniform double in [0, 1) from the top 53 bits of a mixed key.
constexpr double unit_double(std::uint64_t key) { return static_cast<double>(key >> 11) * 0x1.0p-53; }

}  // namespace optoskin
