#pragma once

#include <cstdint>
#include <utility>

namespace perisurf {

// Counter-based noise generator. Every draw is a pure function of
// (seed, stream, counter), so datasets do not depend on thread scheduling or
// on the order in which records are synthesized.
//
//   bits(seed, stream, n) = mix(mix(seed ⊕ mix(stream)) + n·0x9E3779B97F4A7C15)
//
// where mix is the SplitMix64 finalizer. Uniforms take the top 53 bits and
// live in (0, 1]; normals use Box–Muller on counters 2i and 2i+1.

std::uint64_t splitmix64_mix(std::uint64_t z);

std::uint64_t random_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Uniform in (0, 1].
double random_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Two independent standard normals for index i of a stream.
std::pair<double, double> random_normal_pair(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t i);

}  // namespace perisurf
