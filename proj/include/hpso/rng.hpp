#pragma once

#include <cstdint>
#include <random>

namespace hpso {

/// Random substream keyed by (seed, particle, iteration).
///
/// Every particle update draws from its own stream, so a run is reproducible
/// regardless of the order or thread on which particles are processed.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t particle, std::uint64_t iteration);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hpso
