#pragma once

#include <cstdint>
#include <string_view>

namespace lpforge {

/// Deterministic random stream derived from (root seed, stream name, counter).
/// Every consumer draws from its own named sub-stream, so results are
/// reproducible regardless of evaluation order or batch scheduling.
/// Generator is xoshiro256++ seeded through splitmix64; uniform/normal
/// conversions are hand-rolled so sequences are identical across platforms.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::string_view name, std::uint64_t counter = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via the polar Box-Muller method (no cached spare).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_[4];
};

}  // namespace lpforge
