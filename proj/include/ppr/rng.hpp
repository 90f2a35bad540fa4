#pragma once

#include <cstdint>
#include <random>

namespace ppr {

// Identifies one reproducible random stream. The engine for (seed, stream)
// is std::mt19937_64 seeded through std::seed_seq with the four 32-bit halves
// of splitmix64(seed) and splitmix64(seed ^ splitmix64(stream)). Streams are
// therefore independent of the order in which they are requested.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::mt19937_64 engine() const;

  // Child stream for a named sub-task (covariates, dummies, ...) of this
  // stream; deterministic in (seed, stream, tag).
  RngSeed derive(std::uint64_t tag) const;
};

std::uint64_t splitmix64(std::uint64_t x);

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace ppr
