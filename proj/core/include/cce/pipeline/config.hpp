#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"
#include "cce/keyframe/schedule.hpp"

namespace cce::pipeline {

struct AblationFlags {
  bool pfg = true;  // formula grounding
  bool ppd = true;  // event decomposition
  bool pnr = true;  // progressive narrative revision
  bool iks = true;  // keyframe synthesis and latent prior

  bool operator==(const AblationFlags&) const = default;
};

struct RunConfig {
  std::string input_description;
  std::optional<std::uint64_t> seed;

  // formula grounding
  double tau_match = 0.35;
  int top_k = 3;
  int max_fallback_rounds = 2;

  // events
  double tau_p = 0.3;
  int min_gap = 2;
  int max_events = 6;
  double kappa = 5.0;
  int max_retries = 3;

  // narrative
  std::size_t token_budget = 226;
  double minimality_fraction = 0.4;

  // keyframes and schedule
  std::optional<double> sigma;
  double tau_z_fraction = 0.7;
  keyframe::NoiseMode noise_mode = keyframe::NoiseMode::kStandard;
  std::size_t target_frames = 161;
  int temporal_compression = 4;
  double latent_rate = 4.0;
  double operator_band = 0.2;
  double d_min = 0.25;
  double d_max = 10.0;
  int width = 1360;
  int height = 768;

  // backends
  std::string backend = "mock";
  std::string token;
  int text_dim = 16;
  int latent_dim = 48;
  double max_hue_shift = 60.0;
  double timeout_s = 30.0;

  AblationFlags ablations;
  bool emit_package_only = true;

  // locations; not part of the run identity
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> fixtures;
  std::optional<std::filesystem::path> cache_dir;

  /// Assigns one key (file keys and CLI flags share names, '-' and '_'
  /// interchangeable). Throws ConfigError naming the key.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError on the first invalid field.
  void validate() const;

  /// Everything that determines the run's output; excludes paths and token.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  std::string digest() const;

  double effective_sigma() const;
  /// Latent frames for the target video under the temporal compression.
  std::size_t latent_frames() const;
  std::filesystem::path resolved_data_dir() const;
  std::vector<backends::BackendDescriptor> descriptors() const;
};

/// `key = value` lines; '#' comments, blank lines, optional quotes.
std::map<std::string, std::string> parse_key_values(std::string_view text);
/// Applies a config file on top of `base`.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every settable key, in documentation order.
const std::vector<std::string>& config_keys();

/// Installed or source-tree data directory.
std::filesystem::path default_data_dir();

}  // namespace cce::pipeline
