#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cce/backends/backend.hpp"
#include "cce/backends/image.hpp"
#include "cce/keyframe/keyframes.hpp"

namespace cce::keyframe {

using Latent = std::vector<double>;

enum class NoiseMode : std::uint8_t { kStandard = 0, kPaperLiteral = 1 };

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(std::string_view s);

/// max(1, round(d * rate)) - 1, rounding halves away from zero.
std::size_t interior_count(double d, double rate);

/// Interior frames at alpha_j = j / (n + 1), j = 1..n.
std::vector<Latent> interpolate_n(const Latent& prev, const Latent& next, std::size_t n);
std::vector<Latent> interpolate(const Latent& prev, const Latent& next, const TimeSpan& d, double rate);

/// Rescales interior counts so that keyframes + interiors == target.
/// Quotas are proportional to `counts`, or to `durations` when all counts
/// are zero; largest remainders (earlier segment on ties) take the slack.
std::vector<std::size_t> fit_counts(const std::vector<std::size_t>& counts, const std::vector<double>& durations,
                                    std::size_t target_frames);

/// sqrt(1 - alpha_bar) at timestep round(fraction * steps) of a linear beta
/// schedule.
double sigma_from_tau(double tau_fraction, int steps = 1000, double beta_start = 1e-4, double beta_end = 0.02);

double noise_multiplier(double sigma, NoiseMode mode);

struct LatentSchedule {
  std::size_t dim = 0;
  std::vector<Latent> frames;
  /// Per frame: the keyframe t_index pair it lies between; junctions map to
  /// (t, t).
  std::vector<std::pair<int, int>> segment_index;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  NoiseMode mode = NoiseMode::kStandard;

  /// Little-endian container: "CCLS", version u32, frame_count u32, dim u32,
  /// f32 frames row-major, seed u64, sigma f64, mode u8.
  std::vector<std::uint8_t> serialize() const;
  static LatentSchedule deserialize(const std::vector<std::uint8_t>& bytes);
  std::string digest() const;
};

struct ScheduleOptions {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  NoiseMode mode = NoiseMode::kStandard;
  double rate = 4.0;
  /// 0 keeps the raw interior counts.
  std::size_t target_frames = 41;
};

struct ScheduleResult {
  LatentSchedule schedule;
  std::vector<Latent> clean;
  std::vector<Latent> keyframe_latents;
};

/// Adds multiplier * eps (eps ~ N(0, I) from the seed) elementwise.
std::vector<Latent> add_noise(const std::vector<Latent>& clean, double sigma, NoiseMode mode, std::uint64_t seed);

ScheduleResult build_schedule(const std::vector<Keyframe>& keyframes, const std::vector<TimeSpan>& spans,
                              backends::LatentEncoderBackend& encoder, const backends::ImageStore& store,
                              const ScheduleOptions& options);

/// Unit-variance Gaussian frames with no keyframe prior.
LatentSchedule pure_noise_schedule(std::size_t frame_count, std::size_t dim, std::uint64_t seed);

}  // namespace cce::keyframe
