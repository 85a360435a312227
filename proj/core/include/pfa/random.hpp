#pragma once

#include <cstdint>
#include <random>

namespace pfa {

/// Seeded random source with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard; the
/// distributions below are implemented here because the standard library
/// distributions are not required to produce identical sequences across
/// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call).
  double normal();

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64-based combination used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t item);

}  // namespace pfa
