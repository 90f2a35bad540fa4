#include "ppr/rng.hpp"

namespace ppr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 RngSeed::engine() const {
  std::uint64_t a = splitmix64(seed);
  std::uint64_t b = splitmix64(seed ^ splitmix64(stream));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

RngSeed RngSeed::derive(std::uint64_t tag) const {
  return RngSeed{splitmix64(seed ^ splitmix64(tag + 0x51ed270b27a3c1f5ULL)), stream};
}

}  // namespace ppr
