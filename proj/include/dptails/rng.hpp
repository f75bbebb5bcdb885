#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dptails {

// splitmix64 finalizer; stable across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a over the tag bytes.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Seed for the substream identified by (master seed, tag, index). Every
// randomized stage draws from its own substream so fit, transform and
// per-element jitter are reproducible independently of each other.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ hash_tag(tag)) + index);
}

inline std::mt19937_64 substream(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return std::mt19937_64(substream_seed(master, tag, index));
}

}  // namespace dptails
