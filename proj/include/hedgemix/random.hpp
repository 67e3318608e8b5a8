#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hedgemix {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used both as a hash and as the seed-splitting function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

// Counter-based uniform draw in [0, 1): a pure function of (seed, counter).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(hash_combine(seed, counter) >> 11) * 0x1.0p-53;
}

// Named streams derived from one master seed. Each consumer gets its own
// stream so adding a consumer never shifts the draws of another.
enum class Stream : std::uint64_t {
  kEnvironment = 1,
  kAgent = 2,
  kPredicate = 3,
  kInjector = 4,
  kPlanner = 5,
};

constexpr std::uint64_t split_seed(std::uint64_t master, Stream stream) {
  return hash_combine(master, static_cast<std::uint64_t>(stream) * 0x51ed270b27b1d1a3ULL);
}

inline Rng make_rng(std::uint64_t master, Stream stream) {
  return Rng(split_seed(master, stream));
}

}  // namespace hedgemix
