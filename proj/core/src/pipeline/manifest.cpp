#include "cce/pipeline/manifest.hpp"

#include <algorithm>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::pipeline {

using nlohmann::json;

std::size_t stage_index(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i)
    if (name == kStages[i]) return i;
  throw ManifestError("unknown stage '" + std::string(name) + "'");
}

bool is_stage(std::string_view name) {
  return std::any_of(std::begin(kStages), std::end(kStages), [&](const char* s) { return name == s; });
}

std::string to_string(StageStatus s) {
  switch (s) {
    case StageStatus::kOk: return "ok";
    case StageStatus::kSkipped: return "skipped";
    case StageStatus::kFailed: return "failed";
  }
  return "failed";
}

StageStatus stage_status_from_string(std::string_view s) {
  if (s == "ok") return StageStatus::kOk;
  if (s == "skipped") return StageStatus::kSkipped;
  if (s == "failed") return StageStatus::kFailed;
  throw ManifestError("unknown stage status '" + std::string(s) + "'");
}

std::string chain_digest(const std::string& previous, const json& data) {
  return sha256_hex(previous + "\n" + canonical_dump(data));
}

json StageRecord::to_json() const {
  json j = {{"name", name}, {"status", pipeline::to_string(status)}, {"data", data}, {"calls", calls},
            {"digest", digest}};
  if (error_code) j["error"] = {{"code", *error_code}, {"message", error_message.value_or("")}};
  return j;
}

StageRecord StageRecord::from_json(const json& j) {
  StageRecord r;
  r.name = j.at("name").get<std::string>();
  r.status = stage_status_from_string(j.at("status").get<std::string>());
  r.data = j.at("data");
  r.calls = j.at("calls").get<std::vector<std::string>>();
  r.digest = j.at("digest").get<std::string>();
  if (j.contains("error")) {
    r.error_code = j.at("error").at("code").get<std::string>();
    r.error_message = j.at("error").at("message").get<std::string>();
  }
  return r;
}

RunManifest::RunManifest(json config, std::string config_digest)
    : config_(std::move(config)), config_digest_(std::move(config_digest)) {}

const StageRecord& RunManifest::append(StageRecord record) {
  const std::size_t idx = stage_index(record.name);
  if (failed()) throw ManifestError("cannot append '" + record.name + "' after a failed stage");
  if (!stages_.empty() && stage_index(stages_.back().name) >= idx)
    throw ManifestError("stage '" + record.name + "' out of order after '" + stages_.back().name + "'");
  record.digest = chain_digest(stages_.empty() ? std::string() : stages_.back().digest, record.data);
  stages_.push_back(std::move(record));
  return stages_.back();
}

const StageRecord* RunManifest::find(std::string_view name) const {
  for (const auto& s : stages_)
    if (s.name == name) return &s;
  return nullptr;
}

RunManifest RunManifest::truncated_before(std::string_view name) const {
  const std::size_t idx = stage_index(name);
  RunManifest out(config_, config_digest_);
  for (const auto& s : stages_) {
    if (stage_index(s.name) >= idx) break;
    out.stages_.push_back(s);
    if (auto it = timings_ms_.find(s.name); it != timings_ms_.end()) out.timings_ms_[s.name] = it->second;
  }
  return out;
}

const StageRecord* RunManifest::failure() const {
  for (const auto& s : stages_)
    if (s.status == StageStatus::kFailed) return &s;
  return nullptr;
}

bool RunManifest::failed() const { return failure() != nullptr; }

void RunManifest::throw_if_failed() const {
  if (const auto* f = failure())
    throw StageError(f->name, f->error_code.value_or("error"), f->error_message.value_or(""));
}

json RunManifest::to_json() const {
  json stages = json::array();
  for (const auto& s : stages_) stages.push_back(s.to_json());
  const auto* f = failure();
  return {{"manifest_version", kManifestVersion},
          {"config", config_},
          {"config_digest", config_digest_},
          {"stages", stages},
          {"failed_stage", f ? json(f->name) : json(nullptr)},
          {"final_digest", stages_.empty() ? std::string() : stages_.back().digest}};
}

RunManifest RunManifest::from_json(const json& j) {
  if (!j.is_object() || !j.contains("manifest_version")) throw ManifestError("not a run manifest");
  if (j.at("manifest_version") != kManifestVersion)
    throw ManifestError("unsupported manifest_version " + j.at("manifest_version").dump());
  RunManifest m(j.at("config"), j.at("config_digest").get<std::string>());
  for (const auto& s : j.at("stages")) {
    StageRecord r = StageRecord::from_json(s);
    const std::string recorded = r.digest;
    const auto& appended = m.append(std::move(r));
    if (appended.digest != recorded) throw ManifestError("digest chain broken at stage '" + appended.name + "'");
  }
  return m;
}

std::string RunManifest::dump() const { return to_json().dump(2) + "\n"; }

std::vector<std::string> RunManifest::problems() const {
  std::vector<std::string> out;
  std::string prev;
  for (const auto& s : stages_) {
    if (chain_digest(prev, s.data) != s.digest) out.push_back("stage '" + s.name + "': digest mismatch");
    prev = s.digest;
  }
  if (json_digest(config_) != config_digest_) out.push_back("config digest mismatch");

  auto ok = [&](const char* name) -> const json* {
    const auto* s = find(name);
    return s && s->status == StageStatus::kOk ? &s->data : nullptr;
  };
  std::size_t events = 0;
  if (const auto* ev = ok("events")) {
    events = ev->at("chain").at("events").size();
    if (const auto* tr = ok("trajectory"); tr && ev->at("chain").at("trajectory_digest") != tr->at("digest"))
      out.push_back("events: trajectory digest does not match the trajectory stage");
  }
  if (const auto* g = ok("graphs")) {
    if (g->at("graphs").size() != events) out.push_back("graphs: one graph per event expected");
    const auto& refs = g->at("chain").at("events");
    for (std::size_t i = 0; i < refs.size() && i < g->at("graphs").size(); ++i)
      if (refs[i].at("graph_ref") != g->at("graph_digests").at(i))
        out.push_back("graphs: event " + std::to_string(i + 1) + " graph_ref mismatch");
  }
  if (const auto* n = ok("narratives"); n && n->at("narratives").size() != events)
    out.push_back("narratives: one narrative per event expected");
  if (const auto* k = ok("keyframes"); k && k->at("keyframes").size() != events)
    out.push_back("keyframes: one keyframe per event expected");
  if (const auto* p = ok("package")) {
    if (const auto* s = ok("schedule"); s && p->at("schedule_digest") != s->at("digest"))
      out.push_back("package: schedule digest mismatch");
    if (const auto* pr = ok("prompts"); pr && p->at("positive") != pr->at("pair").at("positive"))
      out.push_back("package: positive prompt mismatch");
  }
  return out;
}

StageReader::StageReader(const RunManifest& manifest, std::string_view current)
    : manifest_(manifest), current_(current), index_(stage_index(current)) {}

const StageRecord& StageReader::record(std::string_view name) const {
  if (stage_index(name) >= index_)
    throw ManifestError("stage '" + current_ + "' may not read '" + std::string(name) + "'");
  const auto* r = manifest_.find(name);
  if (!r) throw ManifestError("stage '" + current_ + "' needs missing stage '" + std::string(name) + "'");
  if (r->status == StageStatus::kFailed)
    throw ManifestError("stage '" + current_ + "' depends on failed stage '" + std::string(name) + "'");
  return *r;
}

bool StageReader::ran(std::string_view name) const {
  const auto& r = record(name);
  return r.status == StageStatus::kOk;
}

}  // namespace cce::pipeline
