#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace retrace::rng {

// Counter-based generator: a SplitMix64-style finalizer applied to the
// combination of (seed, stream, counter). Every draw is a pure function of
// its key, so samples may be produced in any order (or concurrently) and
// stay bitwise reproducible.

inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return mix(mix(mix(seed) ^ stream) ^ counter);
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(draw(seed, stream, counter) >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                      double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, stream, counter);
}

// Standard normal by Box-Muller; consumes counters 2k and 2k+1.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  const double u1 = 1.0 - uniform01(seed, stream, 2 * k);  // (0, 1]
  const double u2 = uniform01(seed, stream, 2 * k + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform direction on the unit sphere; consumes counters 3k..3k+2.
inline Eigen::Vector3d unit_vector(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  const Eigen::Vector3d v(gaussian(seed, stream, 3 * k), gaussian(seed, stream, 3 * k + 1),
                          gaussian(seed, stream, 3 * k + 2));
  const double n = v.norm();
  return n > 1e-12 ? Eigen::Vector3d(v / n) : Eigen::Vector3d::UnitX();
}

}  // namespace retrace::rng
