// cce: command-line front end for the generation pipeline.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cce/error.hpp"
#include "cce/formula/knowledge_base.hpp"
#include "cce/pipeline/pipeline.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace cce;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStage = 2;

const std::set<std::string> kSwitchKeys = {"pfg", "ppd", "pnr", "iks", "emit_package_only"};

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// One CLI option per config key; switches accept a bare flag as "on".
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app, const std::set<std::string>& skip = {}) {
    for (const auto& key : pipeline::config_keys()) {
      if (skip.count(key)) continue;
      auto* opt = app.add_option(flag_name(key), values[key], "config key '" + key + "'");
      if (kSwitchKeys.count(key)) opt->expected(0, 1);
      opt->group("Config");
      options[key] = opt;
    }
  }

  void apply(pipeline::RunConfig& c) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      const std::string& v = values.at(key);
      c.set(key, v.empty() && kSwitchKeys.count(key) ? "on" : v);
    }
  }
};

pipeline::RunConfig from_environment() {
  pipeline::RunConfig c;
  if (const char* url = std::getenv("CCE_BACKEND_URL"); url && *url) c.set("backends", url);
  if (const char* token = std::getenv("CCE_TOKEN"); token && *token) c.set("token", token);
  if (const char* cache = std::getenv("CCE_CACHE_DIR"); cache && *cache) c.set("cache_dir", cache);
  return c;
}

std::string resolve_stage(const std::string& name) {
  if (pipeline::is_stage(name)) return name;
  if (pipeline::is_stage(name + "s")) return name + "s";
  throw ConfigError("unknown stage '" + name + "'");
}

std::vector<std::string> read_descriptions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input-file: cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("input-file: no descriptions in " + path.string());
  return out;
}

int report(const pipeline::RunManifest& m, const fs::path& path) {
  std::cout << path.string() << "\n";
  if (const auto* f = m.failure()) {
    std::cerr << "stage '" << f->name << "' failed (" << f->error_code.value_or("error")
              << "): " << f->error_message.value_or("") << "\n";
    return kExitStage;
  }
  return kExitOk;
}

int cmd_run(pipeline::RunConfig config, const std::string& input_file, int parallel,
            const std::string& out) {
  const auto resources = pipeline::Resources::load(config.resolved_data_dir());
  if (!input_file.empty()) {
    const auto descriptions = read_descriptions(input_file);
    config.input_description = descriptions.front();
    config.validate();
    const fs::path dir = out.empty() ? fs::path("cce_runs") / "batch" : fs::path(out);
    const auto batch = pipeline::run_batch(config, descriptions, resources, dir, parallel);
    int code = kExitOk;
    for (std::size_t i = 0; i < batch.manifests.size(); ++i)
      code = std::max(code, report(batch.manifests[i], batch.paths[i]));
    return code;
  }
  config.validate();
  const fs::path dir = out.empty() ? fs::path("cce_runs") / config.digest().substr(0, 12) : fs::path(out);
  const auto manifest = pipeline::run_config(config, resources, dir);
  return report(manifest, dir / "manifest.json");
}

int cmd_validate_kb(const fs::path& data_dir, const std::string& kb_path, const std::string& laws_path) {
  const fs::path laws = laws_path.empty() ? data_dir / "laws.json" : fs::path(laws_path);
  const fs::path kb = kb_path.empty() ? data_dir / "kb.json" : fs::path(kb_path);
  const auto taxonomy = formula::LawTaxonomy::load(laws);
  std::ifstream in(kb);
  if (!in) throw KnowledgeBaseError("cannot open knowledge base " + kb.string());
  const json records = json::parse(in);
  const auto problems = formula::validate_knowledge_base(records, taxonomy);
  for (const auto& p : problems) std::cerr << kb.string() << ": " << p << "\n";
  if (!problems.empty()) return kExitStage;
  std::cout << kb.string() << ": " << records.size() << " formulas, " << taxonomy.laws().size()
            << " laws, ok\n";
  return kExitOk;
}

int cmd_inspect(const fs::path& path, const std::string& stage) {
  const auto m = pipeline::read_manifest(path);
  if (!stage.empty()) {
    const std::string name = resolve_stage(stage);
    const auto* rec = m.find(name);
    if (!rec) throw ManifestError("stage '" + name + "' is not in " + path.string());
    std::cout << rec->to_json().dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "config " << m.config_digest().substr(0, 16) << "  input: "
            << m.config().value("input", std::string()) << "\n";
  for (const auto& r : m.stages()) {
    std::cout << "  " << r.name << std::string(12 - std::min<std::size_t>(12, r.name.size()), ' ')
              << pipeline::to_string(r.status) << "  " << r.digest.substr(0, 16) << "  calls=" << r.calls.size();
    if (r.error_message) std::cout << "  " << *r.error_message;
    std::cout << "\n";
  }
  const auto problems = m.problems();
  for (const auto& p : problems) std::cout << "problem: " << p << "\n";
  return m.failed() || !problems.empty() ? kExitStage : kExitOk;
}

int cmd_export_prompts(const fs::path& path) {
  const auto m = pipeline::read_manifest(path);
  const auto* prompts = m.find("prompts");
  if (!prompts || prompts->status != pipeline::StageStatus::kOk)
    throw ManifestError("manifest has no prompt stage output");
  json out = prompts->data.at("pair");
  if (const auto* nr = m.find("narratives"); nr && nr->status == pipeline::StageStatus::kOk) {
    json texts = json::array();
    for (const auto& n : nr->data.at("narratives")) texts.push_back(n.at("text"));
    out["event_narratives"] = texts;
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_replay(const fs::path& path, const std::string& from, const ConfigFlags& paths, const std::string& out) {
  const auto prior = pipeline::read_manifest(path);
  auto config = pipeline::RunConfig::from_json(prior.config());
  paths.apply(config);
  const std::string stage = resolve_stage(from);
  const auto resources = pipeline::Resources::load(config.resolved_data_dir());
  const fs::path dir = out.empty() ? path.parent_path() / ("replay_" + stage) : fs::path(out);
  std::optional<fs::path> artifacts = dir / "artifacts";
  if (fs::exists(path.parent_path() / "artifacts") && !fs::exists(*artifacts)) {
    fs::create_directories(dir);
    fs::copy(path.parent_path() / "artifacts", *artifacts, fs::copy_options::recursive);
  }
  pipeline::Pipeline p(config, pipeline::make_suite_for(config, artifacts), resources, artifacts);
  const auto manifest = p.replay(prior, stage);
  return report(manifest, pipeline::write_run(manifest, dir));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-grounded prompt and latent-schedule builder for text-to-video models", "cce"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the pipeline on one description or a file of descriptions");
  ConfigFlags run_flags;
  run_flags.attach(*run);
  std::string config_file, input_file, run_out;
  int parallel = 1;
  run->add_option("--config", config_file, "key = value config file; flags take precedence")->check(CLI::ExistingFile);
  run->add_option("--input-file", input_file, "one description per line")->check(CLI::ExistingFile);
  run->add_option("--parallel", parallel, "concurrent runs in batch mode")->check(CLI::PositiveNumber);
  run->add_option("--out", run_out, "output directory");

  auto* validate = app.add_subcommand("validate-kb", "Check the formula knowledge base");
  std::string data_dir, kb_path, laws_path;
  validate->add_option("--data-dir", data_dir);
  validate->add_option("--kb", kb_path);
  validate->add_option("--laws", laws_path);

  auto* inspect = app.add_subcommand("inspect", "Summarize a manifest or print one stage");
  std::string inspect_path, inspect_stage;
  inspect->add_option("manifest", inspect_path)->required()->check(CLI::ExistingFile);
  inspect->add_option("--stage", inspect_stage);

  auto* exportp = app.add_subcommand("export-prompts", "Print the prompt pair of a manifest");
  std::string export_path;
  exportp->add_option("manifest", export_path)->required()->check(CLI::ExistingFile);

  auto* replay = app.add_subcommand("replay", "Recompute a manifest from a stage onward");
  std::string replay_path, from_stage, replay_out;
  ConfigFlags replay_flags;
  replay->add_option("manifest", replay_path)->required()->check(CLI::ExistingFile);
  replay->add_option("--from-stage", from_stage)->required();
  replay->add_option("--out", replay_out);
  for (const auto& key : {"data_dir", "fixtures", "cache_dir", "token"}) {
    auto* opt = replay->add_option(flag_name(key), replay_flags.values[key]);
    replay_flags.options[key] = opt;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      auto config = from_environment();
      if (!config_file.empty()) config = pipeline::load_config(config_file, config);
      run_flags.apply(config);
      if (input_file.empty() && config.input_description.empty())
        throw ConfigError("run: one of --input, --input-file or a config 'input' is required");
      return cmd_run(std::move(config), input_file, parallel, run_out);
    }
    if (validate->parsed())
      return cmd_validate_kb(data_dir.empty() ? pipeline::default_data_dir() : fs::path(data_dir), kb_path,
                             laws_path);
    if (inspect->parsed()) return cmd_inspect(inspect_path, inspect_stage);
    if (exportp->parsed()) return cmd_export_prompts(export_path);
    if (replay->parsed()) return cmd_replay(replay_path, from_stage, replay_flags, replay_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitUsage;
}
