#include "cce/keyframe/schedule.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"
#include "cce/util/rng.hpp"

namespace cce::keyframe {

namespace {

constexpr std::uint32_t kContainerVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t read(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw SchemaError("CCLS container truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(NoiseMode mode) { return mode == NoiseMode::kStandard ? "standard" : "paper_literal"; }

NoiseMode noise_mode_from_string(std::string_view s) {
  if (s == "standard") return NoiseMode::kStandard;
  if (s == "paper_literal") return NoiseMode::kPaperLiteral;
  throw ConfigError("unknown noise mode '" + std::string(s) + "'");
}

std::size_t interior_count(double d, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw PreconditionError("interior_count: rate must be > 0");
  if (!(d >= 0.0) || !std::isfinite(d)) throw PreconditionError("interior_count: duration must be finite and >= 0");
  const double frames = std::round(d * rate);
  return frames <= 1.0 ? 0 : static_cast<std::size_t>(frames) - 1;
}

std::vector<Latent> interpolate_n(const Latent& prev, const Latent& next, std::size_t n) {
  if (prev.size() != next.size())
    throw LengthMismatchError("interpolate: latents of length " + std::to_string(prev.size()) + " and " +
                              std::to_string(next.size()));
  std::vector<Latent> out(n, Latent(prev.size()));
  for (std::size_t j = 1; j <= n; ++j) {
    const double a = static_cast<double>(j) / static_cast<double>(n + 1);
    for (std::size_t k = 0; k < prev.size(); ++k) out[j - 1][k] = (1.0 - a) * prev[k] + a * next[k];
  }
  return out;
}

std::vector<Latent> interpolate(const Latent& prev, const Latent& next, const TimeSpan& d, double rate) {
  return interpolate_n(prev, next, interior_count(d.d, rate));
}

std::vector<std::size_t> fit_counts(const std::vector<std::size_t>& counts, const std::vector<double>& durations,
                                    std::size_t target_frames) {
  const std::size_t keyframes = counts.size() + 1;
  if (target_frames < keyframes)
    throw TargetLengthInfeasibleError(std::to_string(keyframes) + " keyframes exceed the " +
                                      std::to_string(target_frames) + "-frame target");
  if (durations.size() != counts.size()) throw PreconditionError("fit_counts: one duration per segment required");
  if (counts.empty()) return {};
  const double slack = static_cast<double>(target_frames - keyframes);

  std::vector<double> weights(counts.begin(), counts.end());
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total == 0.0) {
    weights = durations;
    total = std::accumulate(weights.begin(), weights.end(), 0.0);
  }
  if (!(total > 0.0)) {
    weights.assign(counts.size(), 1.0);
    total = static_cast<double>(counts.size());
  }

  std::vector<std::size_t> out(counts.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double quota = slack * weights[i] / total;
    out[i] = static_cast<std::size_t>(std::floor(quota));
    assigned += out[i];
    remainders.emplace_back(quota - std::floor(quota), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const auto need = static_cast<std::size_t>(slack) - assigned;
  for (std::size_t k = 0; k < need; ++k) ++out[remainders[k % remainders.size()].second];
  return out;
}

double sigma_from_tau(double tau_fraction, int steps, double beta_start, double beta_end) {
  if (!(tau_fraction >= 0.0 && tau_fraction <= 1.0)) throw ConfigError("tau_z fraction must lie in [0, 1]");
  if (steps < 2) throw ConfigError("noise schedule needs at least 2 steps");
  const auto t = static_cast<int>(std::lround(tau_fraction * steps));
  double alpha_bar = 1.0;
  for (int i = 0; i < t; ++i) {
    const double beta = beta_start + (beta_end - beta_start) * i / (steps - 1);
    alpha_bar *= 1.0 - beta;
  }
  return std::sqrt(1.0 - alpha_bar);
}

double noise_multiplier(double sigma, NoiseMode mode) { return mode == NoiseMode::kStandard ? sigma : sigma * sigma; }

std::vector<std::uint8_t> LatentSchedule::serialize() const {
  std::vector<std::uint8_t> out{'C', 'C', 'L', 'S'};
  out.reserve(4 + 12 + frames.size() * dim * 4 + 17);
  put_u32(out, kContainerVersion);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& f : frames) {
    if (f.size() != dim) throw LengthMismatchError("schedule frame of length " + std::to_string(f.size()));
    for (double v : f) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  put_u64(out, seed);
  put_u64(out, std::bit_cast<std::uint64_t>(sigma));
  out.push_back(static_cast<std::uint8_t>(mode));
  return out;
}

LatentSchedule LatentSchedule::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "CCLS"))
    throw SchemaError("not a CCLS container");
  Reader r(bytes);
  r.read(4);
  if (const auto version = r.read(4); version != kContainerVersion)
    throw SchemaError("unsupported CCLS version " + std::to_string(version));
  LatentSchedule s;
  const auto count = r.read(4);
  s.dim = r.read(4);
  s.frames.assign(count, Latent(s.dim));
  for (auto& f : s.frames)
    for (auto& v : f) v = std::bit_cast<float>(static_cast<std::uint32_t>(r.read(4)));
  s.seed = r.read(8);
  s.sigma = std::bit_cast<double>(r.read(8));
  const auto mode = r.read(1);
  if (mode > 1) throw SchemaError("unknown CCLS noise mode " + std::to_string(mode));
  s.mode = static_cast<NoiseMode>(mode);
  if (!r.done()) throw SchemaError("trailing bytes after CCLS container");
  return s;
}

std::string LatentSchedule::digest() const { return sha256_hex(serialize()); }

std::vector<Latent> add_noise(const std::vector<Latent>& clean, double sigma, NoiseMode mode, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw PreconditionError("add_noise: sigma must be finite and >= 0");
  const double m = noise_multiplier(sigma, mode);
  GaussianSource g(seed);
  std::vector<Latent> out = clean;
  for (auto& f : out)
    for (auto& v : f) v += m * g.next();
  return out;
}

ScheduleResult build_schedule(const std::vector<Keyframe>& keyframes, const std::vector<TimeSpan>& spans,
                              backends::LatentEncoderBackend& encoder, const backends::ImageStore& store,
                              const ScheduleOptions& options) {
  if (keyframes.empty()) throw PreconditionError("build_schedule: no keyframes");
  if (spans.size() != keyframes.size() - 1)
    throw PreconditionError("build_schedule: " + std::to_string(spans.size()) + " spans for " +
                            std::to_string(keyframes.size()) + " keyframes");
  if (!(options.sigma >= 0.0)) throw PreconditionError("build_schedule: sigma must be >= 0");

  ScheduleResult result;
  std::map<std::string, Latent> encoded;
  for (const auto& k : keyframes) {
    auto it = encoded.find(k.image.digest);
    if (it == encoded.end()) {
      auto image = store.get(k.image);
      if (!image) throw PreconditionError("build_schedule: image " + k.image.digest + " missing from store");
      it = encoded.emplace(k.image.digest, encoder.encode_image(*image)).first;
    }
    result.keyframe_latents.push_back(it->second);
  }
  const std::size_t dim = result.keyframe_latents.front().size();

  std::vector<std::size_t> counts;
  std::vector<double> durations;
  for (const auto& s : spans) {
    counts.push_back(interior_count(s.d, options.rate));
    durations.push_back(s.d);
  }
  if (options.target_frames > 0) counts = fit_counts(counts, durations, options.target_frames);

  auto& sched = result.schedule;
  sched.dim = dim;
  sched.sigma = options.sigma;
  sched.seed = options.seed;
  sched.mode = options.mode;
  const int t0 = keyframes.front().t_index;
  result.clean.push_back(result.keyframe_latents.front());
  sched.segment_index.emplace_back(t0, t0);
  if (keyframes.size() == 1) {
    for (std::size_t i = 1; i < options.target_frames; ++i) {
      result.clean.push_back(result.keyframe_latents.front());
      sched.segment_index.emplace_back(t0, t0);
    }
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const int a = keyframes[i].t_index, b = keyframes[i + 1].t_index;
    for (auto& f : interpolate_n(result.keyframe_latents[i], result.keyframe_latents[i + 1], counts[i])) {
      result.clean.push_back(std::move(f));
      sched.segment_index.emplace_back(a, b);
    }
    result.clean.push_back(result.keyframe_latents[i + 1]);
    sched.segment_index.emplace_back(b, b);
  }
  sched.frames = add_noise(result.clean, options.sigma, options.mode, options.seed);
  return result;
}

LatentSchedule pure_noise_schedule(std::size_t frame_count, std::size_t dim, std::uint64_t seed) {
  if (frame_count == 0 || dim == 0) throw PreconditionError("pure_noise_schedule: empty shape");
  LatentSchedule s;
  s.dim = dim;
  s.sigma = 1.0;
  s.seed = seed;
  s.frames = add_noise(std::vector<Latent>(frame_count, Latent(dim, 0.0)), 1.0, NoiseMode::kStandard, seed);
  s.segment_index.assign(frame_count, {0, 0});
  return s;
}

}  // namespace cce::keyframe
