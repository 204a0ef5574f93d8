#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cce::pipeline {

inline constexpr int kManifestVersion = 1;

/// Stage names in execution order.
inline constexpr const char* kStages[] = {"law",        "formulas", "trajectory", "events", "graphs",  "narratives",
                                          "prompts",    "keyframes", "schedule",  "package", "denoise"};
inline constexpr std::size_t kStageCount = std::size(kStages);

std::size_t stage_index(std::string_view name);
bool is_stage(std::string_view name);

enum class StageStatus { kOk, kSkipped, kFailed };
std::string to_string(StageStatus s);
StageStatus stage_status_from_string(std::string_view s);

struct StageRecord {
  std::string name;
  StageStatus status = StageStatus::kOk;
  nlohmann::json data = nlohmann::json::object();
  /// Idempotency keys of the backend calls made while computing the stage.
  std::vector<std::string> calls;
  /// sha256(previous stage digest + canonical data); chains the stages.
  std::string digest;
  std::optional<std::string> error_code;
  std::optional<std::string> error_message;

  nlohmann::json to_json() const;
  static StageRecord from_json(const nlohmann::json& j);
};

/// Append-only record of one run. Timings are kept beside the manifest so
/// that the manifest bytes depend only on config, seed and backends.
class RunManifest {
 public:
  RunManifest() = default;
  RunManifest(nlohmann::json config, std::string config_digest);

  /// Appends the next stage; names must follow kStages order.
  const StageRecord& append(StageRecord record);
  const std::vector<StageRecord>& stages() const { return stages_; }
  const StageRecord* find(std::string_view name) const;
  /// Keeps the stages strictly before `name`.
  RunManifest truncated_before(std::string_view name) const;

  const nlohmann::json& config() const { return config_; }
  const std::string& config_digest() const { return config_digest_; }
  bool failed() const;
  const StageRecord* failure() const;
  /// Throws StageError for a failed manifest.
  void throw_if_failed() const;

  std::map<std::string, double>& timings_ms() { return timings_ms_; }
  const std::map<std::string, double>& timings_ms() const { return timings_ms_; }

  nlohmann::json to_json() const;
  /// Rejects unknown versions and broken digest chains.
  static RunManifest from_json(const nlohmann::json& j);
  std::string dump() const;

  /// Cross-reference problems: digest chain, trajectory digest in the event
  /// chain, per-event counts of graphs, narratives and keyframes, package
  /// references. Empty when consistent.
  std::vector<std::string> problems() const;

 private:
  nlohmann::json config_ = nlohmann::json::object();
  std::string config_digest_;
  std::vector<StageRecord> stages_;
  std::map<std::string, double> timings_ms_;
};

std::string chain_digest(const std::string& previous, const nlohmann::json& data);

/// Read access for the stage currently being computed: only stages placed
/// before it in the manifest order are visible (ManifestError otherwise).
class StageReader {
 public:
  StageReader(const RunManifest& manifest, std::string_view current);

  const StageRecord& record(std::string_view name) const;
  const nlohmann::json& data(std::string_view name) const { return record(name).data; }
  bool ran(std::string_view name) const;
  const std::string& current() const { return current_; }

 private:
  const RunManifest& manifest_;
  std::string current_;
  std::size_t index_;
};

}  // namespace cce::pipeline
