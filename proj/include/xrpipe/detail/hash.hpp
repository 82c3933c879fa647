#pragma once

#include <cstdint>
#include <span>

namespace xrpipe::detail {

// FNV-1a, 64-bit. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t seed) {
  std::uint8_t raw[8];
  for (int i = 0; i < 8; ++i) raw[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return fnv1a64(raw, seed);
}

}  // namespace xrpipe::detail
