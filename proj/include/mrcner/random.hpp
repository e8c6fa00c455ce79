#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mrcner {

// Deterministic helpers on top of std::mt19937_64. The standard library
// distributions are implementation-defined, so everything that feeds
// checkpoints, sampling or shuffling goes through these instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n), rejection sampled. n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Normal(0, std) resampled until it lies within two standard deviations.
  double truncated_normal(double std);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a(std::string_view text);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace mrcner
