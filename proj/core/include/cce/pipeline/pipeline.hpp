#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cce/backends/suite.hpp"
#include "cce/formula/knowledge_base.hpp"
#include "cce/narrative/lexicon.hpp"
#include "cce/pipeline/config.hpp"
#include "cce/pipeline/manifest.hpp"

namespace cce::pipeline {

/// Read-only inputs shared by concurrent runs.
struct Resources {
  formula::LawTaxonomy taxonomy;
  formula::KnowledgeBase kb;
  narrative::Lexicon lexicon;

  /// laws.json, kb.json, negative_lexicon.txt, direction_lexicon.json.
  static std::shared_ptr<const Resources> load(const std::filesystem::path& data_dir);
};

/// One run of the generation pipeline over a backend suite.
class Pipeline {
 public:
  Pipeline(RunConfig config, backends::BackendSuite suite, std::shared_ptr<const Resources> resources,
           std::optional<std::filesystem::path> artifacts_dir = std::nullopt);

  /// Runs every stage in order. A failing stage is recorded with its error
  /// and ends the run; the partial manifest is returned.
  RunManifest run();
  /// Reuses the stages of `prior` before `from_stage` and recomputes the
  /// rest. The prior config must match this pipeline's config.
  RunManifest replay(const RunManifest& prior, std::string_view from_stage);

  const RunConfig& config() const { return config_; }
  backends::BackendSuite& suite() { return suite_; }

 private:
  RunManifest continue_from(RunManifest manifest, std::size_t first_stage);
  nlohmann::json compute(const StageReader& in, std::string_view stage, bool& skipped);

  nlohmann::json stage_law(const StageReader& in);
  nlohmann::json stage_formulas(const StageReader& in);
  nlohmann::json stage_trajectory(const StageReader& in);
  nlohmann::json stage_events(const StageReader& in);
  nlohmann::json stage_graphs(const StageReader& in);
  nlohmann::json stage_narratives(const StageReader& in);
  nlohmann::json stage_prompts(const StageReader& in);
  nlohmann::json stage_keyframes(const StageReader& in);
  nlohmann::json stage_schedule(const StageReader& in);
  nlohmann::json stage_package(const StageReader& in);
  nlohmann::json stage_denoise(const StageReader& in);

  std::vector<std::uint8_t> schedule_bytes(const std::string& digest) const;

  RunConfig config_;
  backends::BackendSuite suite_;
  std::shared_ptr<const Resources> resources_;
  std::optional<std::filesystem::path> artifacts_dir_;
  std::map<std::string, std::vector<std::uint8_t>> schedules_;
};

/// Suite for a config: mocks (with the fixture scenarios) or shim clients.
backends::BackendSuite make_suite_for(const RunConfig& config,
                                      const std::optional<std::filesystem::path>& image_dir = std::nullopt);

/// Writes manifest.json and timings.json into `dir`; returns the manifest
/// path. Binary artifacts are already under dir/artifacts.
std::filesystem::path write_run(const RunManifest& manifest, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& path);

/// Runs one configured pipeline writing into `out_dir` (or in memory).
RunManifest run_config(const RunConfig& config, std::shared_ptr<const Resources> resources,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct BatchResult {
  std::vector<RunManifest> manifests;
  std::vector<std::filesystem::path> paths;
};

/// Independent runs, one per description, on up to `parallel` threads.
/// Run i writes into out_dir/run_<i>.
BatchResult run_batch(const RunConfig& base, const std::vector<std::string>& descriptions,
                      std::shared_ptr<const Resources> resources, const std::filesystem::path& out_dir,
                      int parallel);

}  // namespace cce::pipeline
