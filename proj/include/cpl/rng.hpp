#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Counter-based randomness: every draw is a pure function of (seed, stream, index),
// so results never depend on evaluation order or thread count.
namespace cpl::rng {

enum Stream : std::uint64_t {
  kBernoulli = 1,
  kGff = 2,
  kInterlacementStart = 3,
  kInterlacementStep = 4,
  kWalkStep = 5,
  kReplica = 6,
  kWalkStart = 7,
  kIsoSeed = 8,
  kSubset = 9,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^ index);
}

// Uniform in [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return static_cast<double>(bits(seed, stream, index) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
constexpr std::uint64_t below(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                              std::uint64_t n) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(bits(seed, stream, index)) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

// Standard normal by Box-Muller over the counter pair (2i, 2i+1).
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = 1.0 - uniform(seed, stream, 2 * index);
  const double u2 = uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Seed of child experiment `index` on `stream`.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return bits(seed, stream, index);
}

}  // namespace cpl::rng
