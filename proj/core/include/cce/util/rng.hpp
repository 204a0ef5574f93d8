#pragma once

#include <cstdint>
#include <random>

namespace cce {

/// Standard normal generator whose output depends only on the seed.
///
/// std::normal_distribution is implementation-defined, so the transform is
/// done here (Box-Muller over the fully specified mt19937_64 stream). That
/// keeps seeded schedules byte-identical across standard libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next();

  /// Uniform in the open interval (0, 1), 53 bits of mantissa.
  double uniform_open();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// splitmix64 step; used to expand a hash into deterministic streams.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace cce
