#pragma once

#include <cstdint>

namespace coilpilot {

// Counter-based generator: every draw is a pure function of
// (seed, stream, index), so telemetry never depends on call order or on the
// standard library's distribution implementations.
struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t bits(std::uint64_t index) const;
  // Uniform in the open interval (0, 1).
  double uniform(std::uint64_t index) const;
  // Standard normal; `lane` selects independent variates for the same index.
  double normal(std::uint64_t index, std::uint32_t lane = 0) const;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace coilpilot
