#include "hpso/rng.hpp"

namespace hpso {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Stream::Stream(std::uint64_t seed, std::uint64_t particle, std::uint64_t iteration)
    : engine_(splitmix64(splitmix64(splitmix64(seed) ^ particle) ^ iteration)) {}

}  // namespace hpso
