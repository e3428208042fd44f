#include "coilpilot/rng.hpp"

#include <cmath>

namespace coilpilot {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

double CounterRng::uniform(std::uint64_t index) const {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index, std::uint32_t lane) const {
  // Box-Muller on a pair of uniforms dedicated to (index, lane).
  const std::uint64_t base = (index << 3) ^ (static_cast<std::uint64_t>(lane) << 1);
  const double u1 = uniform(base);
  const double u2 = uniform(base | 1U);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace coilpilot
