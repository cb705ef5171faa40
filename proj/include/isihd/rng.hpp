#pragma once

#include <cmath>
#include <cstdint>

namespace isihd {

// Counter-based Gaussian stream. Every draw is a pure function of
// (master_seed, path_id, step, component), so thread scheduling can never
// reorder or split the stream: parallel runs are bit-identical to serial ones.
namespace rng {

// splitmix64 finalizer: the standard 64-bit avalanche mix
inline uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// keyed counter hash: three chained splitmix64 rounds over the coordinates
inline uint64_t keyed(uint64_t seed, uint64_t path, uint64_t step, uint64_t component) {
  uint64_t z = seed;
  z = mix64(z + kGolden * (path + 1));
  z = mix64(z + kGolden * (step + 1));
  z = mix64(z + kGolden * (component + 1));
  return z;
}

// uniform in (0, 1]: top 53 bits, shifted off zero
inline double to_unit(uint64_t z) {
  return (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;
}

// one standard normal via Box-Muller (cosine branch); uses two independent
// counter slots per component so draws never overlap
inline double gaussian(uint64_t seed, uint64_t path, uint64_t step, uint64_t component) {
  const double u1 = to_unit(keyed(seed, path, step, 2 * component));
  const double u2 = to_unit(keyed(seed, path, step, 2 * component + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace rng
}  // namespace isihd
