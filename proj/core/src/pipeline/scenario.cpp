#include "cce/pipeline/scenario.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "cce/error.hpp"

namespace cce::pipeline {

std::vector<FixtureScenario> load_fixture_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixtures " + path.string());
  const auto j = nlohmann::json::parse(in);
  std::vector<FixtureScenario> out;
  for (const auto& s : j)
    if (s.contains("name") && s.contains("description"))
      out.push_back({s.at("name").get<std::string>(), s.at("description").get<std::string>()});
  return out;
}

}  // namespace cce::pipeline
