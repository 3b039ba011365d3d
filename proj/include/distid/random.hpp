#pragma once

#include <cstdint>
#include <random>

namespace distid {

// SplitMix64 finalizer; derives independent stream seeds from one root seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// Platform-independent generator: std::mt19937_64 (its output sequence is
// fixed by the standard) plus explicit conversions, so no
// implementation-defined std::*_distribution is involved.
//   uniform01:   top 53 bits scaled by 2^-53, in [0, 1)
//   normal:      Marsaglia polar method, second deviate cached
//   uniform_int: rejection sampling on the 64-bit output
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace distid
