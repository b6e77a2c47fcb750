#include "perisurf/rng.hpp"

#include <cmath>

#include "perisurf/types.hpp"

namespace perisurf {

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t random_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t key = splitmix64_mix(seed ^ splitmix64_mix(stream));
  return splitmix64_mix(key + counter * 0x9E3779B97F4A7C15ULL);
}

double random_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t top = random_bits(seed, stream, counter) >> 11;
  return static_cast<double>(top + 1) * 0x1.0p-53;
}

std::pair<double, double> random_normal_pair(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t i) {
  const double u1 = random_uniform(seed, stream, 2 * i);
  const double u2 = random_uniform(seed, stream, 2 * i + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = kTwoPi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace perisurf
