#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace consearch {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// FNV-1a over the bytes of `data`, starting from offset_basis ^ seed.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0) {
  std::uint64_t h = kFnvOffsetBasis ^ seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace consearch
