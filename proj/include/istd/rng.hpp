#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace istd {

// SplitMix64 (Steele, Lea & Flood 2014). One 64-bit word of state:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// Uniform doubles take the top 53 bits; normals use the Box-Muller cosine
// branch with one fresh pair of uniforms per draw. Everything is integer
// arithmetic plus log/sqrt/cos, so streams match across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Independent child stream, used to give each scene its own seed.
  std::uint64_t fork() { return next(); }

 private:
  std::uint64_t state_;
};

}  // namespace istd
