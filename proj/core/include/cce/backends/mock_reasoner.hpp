#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"

namespace cce::backends {

/// Deterministic reasoning backend.
///
/// Lookup order for a task: the exact table (task kind + content hash of
/// the payload), registered handlers, scenario fixtures whose `match`
/// substring occurs in the payload's `description`, then built-in defaults.
/// Every path is a pure function of the payload.
class MockReasoner : public ReasoningBackend {
 public:
  using Handler = std::function<std::optional<nlohmann::json>(const ReasonTask&)>;

  MockReasoner() = default;
  /// `scenarios` is an array of `{match, tasks: {<kind>: response}}`.
  explicit MockReasoner(nlohmann::json scenarios);
  static nlohmann::json load_scenarios(const std::filesystem::path& path);

  void add_exact(const std::string& kind, const nlohmann::json& payload, nlohmann::json response);
  void add_handler(const std::string& kind, Handler handler);

  std::string model_id() const override { return "mock-reasoner"; }
  /// Number of do_reason calls per task kind.
  std::map<std::string, int> call_counts() const;

 protected:
  nlohmann::json do_reason(const ReasonTask& task, const nlohmann::json& schema) override;

 private:
  const nlohmann::json* scenario_for(const nlohmann::json& payload) const;

  nlohmann::json scenarios_ = nlohmann::json::array();
  std::map<std::string, nlohmann::json> exact_;
  std::map<std::string, std::vector<Handler>> handlers_;
  mutable std::mutex mu_;
  std::map<std::string, int> counts_;
};

/// Built-in response for a task; exposed for tests of the default policy.
nlohmann::json default_reasoning(const ReasonTask& task, const nlohmann::json* scenario);

}  // namespace cce::backends
