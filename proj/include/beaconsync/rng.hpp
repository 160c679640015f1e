#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "beaconsync/pose.hpp"

namespace beaconsync {

/// Seeded random stream with platform-independent output.
///
/// std::mt19937_64 output is fixed by the standard, but the std distributions
/// are not, so uniform and normal draws are computed here directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream for one subsystem of one trial, keyed by a fixed label
  /// so adding a subsystem never shifts another subsystem's draws.
  static Rng stream(std::uint64_t trial_seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean, double sigma);
  /// Isotropic Gaussian vector, `sigma` per axis.
  Vec3 normal_vec3(double sigma);
  Vec3 unit_vector();

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace beaconsync
