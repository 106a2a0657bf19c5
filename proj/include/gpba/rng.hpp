#pragma once

#include <cstdint>
#include <random>

namespace gpba {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replication `index` under `base_seed`:
///   splitmix64(base_seed ^ splitmix64(index)).
/// Replications are therefore independent of each other and of scheduling
/// order, and any single one can be rerun from (base_seed, index).
constexpr std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(base_seed ^ splitmix64(index));
}

/// Named sub-streams of one run seed (oracle noise, policy randomization).
enum class Stream : std::uint64_t { kOracle = 1, kPolicy = 2 };

constexpr std::uint64_t stream_seed(std::uint64_t run_seed, Stream stream) {
  return splitmix64(run_seed + 0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(stream));
}

/// Uniform draw on the open interval (0, 1).
inline double open_unit(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return u;
}

}  // namespace gpba
