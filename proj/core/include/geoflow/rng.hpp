#pragma once

#include <cstdint>
#include <random>

namespace geoflow {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of trial `index`: splitmix64(master ^ index). Trials are therefore
/// independent of how they are scheduled across workers.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) { return splitmix64(master ^ index); }

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace geoflow
