#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mbal {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a
constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the sub-stream (master, trial, role). Streams with different
/// roles never share state, so e.g. coin flips cannot shift the data
/// sequence.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, std::string_view role) {
  return mix64(mix64(mix64(master) ^ trial) ^ hash_tag(role));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t trial, std::string_view role) {
  return Rng(derive_seed(master, trial, role));
}

}  // namespace mbal
