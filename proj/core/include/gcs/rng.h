#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gcs {

using Rng = std::mt19937_64;

// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// One step of the SplitMix64 output function.
std::uint64_t splitmix64(std::uint64_t x);

// Derives a named child stream seed from a parent seed:
//   splitmix64(splitmix64(parent ^ fnv1a64(name)) + index).
// Streams with distinct (name, index) pairs are independent for practical
// purposes, and the mapping is stable across platforms.
std::uint64_t child_seed(std::uint64_t parent, std::string_view name,
                         std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t parent, std::string_view name,
                    std::uint64_t index = 0) {
  return Rng(child_seed(parent, name, index));
}

}  // namespace gcs
