#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cce::pipeline {

/// A named input description shipped with the mock fixtures.
struct FixtureScenario {
  std::string name;
  std::string description;
};

/// Entries of a fixture file that carry `name` and `description`.
std::vector<FixtureScenario> load_fixture_scenarios(const std::filesystem::path& path);

}  // namespace cce::pipeline
