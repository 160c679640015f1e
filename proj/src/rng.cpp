#include "beaconsync/rng.hpp"

#include <cmath>
#include <numbers>

namespace beaconsync {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t trial_seed, std::string_view label) {
  const std::uint64_t key = fnv1a64(label);
  Rng rng(0);
  std::seed_seq seq{static_cast<std::uint32_t>(trial_seed), static_cast<std::uint32_t>(trial_seed >> 32),
                    static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal(double mean, double sigma) {
  // Box-Muller, cosine branch only so every call consumes exactly two words.
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sigma * z;
}

Vec3 Rng::normal_vec3(double sigma) {
  const double x = normal(0.0, sigma);
  const double y = normal(0.0, sigma);
  const double z = normal(0.0, sigma);
  return {x, y, z};
}

Vec3 Rng::unit_vector() {
  for (;;) {
    const Vec3 v = normal_vec3(1.0);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

}  // namespace beaconsync
