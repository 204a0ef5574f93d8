#include "cce/pipeline/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "cce/backends/schema.hpp"
#include "cce/error.hpp"
#include "cce/event/continuity.hpp"
#include "cce/event/serialize.hpp"
#include "cce/formula/retrieval.hpp"
#include "cce/keyframe/keyframes.hpp"
#include "cce/keyframe/operator.hpp"
#include "cce/keyframe/schedule.hpp"
#include "cce/narrative/narrative.hpp"
#include "cce/scene/update.hpp"
#include "cce/util/digest.hpp"

namespace cce::pipeline {

using nlohmann::json;
using backends::Task;

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ManifestError("cannot write " + path.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

event::MonotoneDecls monotone_from_json(const json& j) {
  event::MonotoneDecls out;
  for (const auto& [sym, m] : j.items()) out[sym] = event::monotone_from_string(m.get<std::string>());
  return out;
}

json monotone_to_json(const event::MonotoneDecls& decls) {
  json out = json::object();
  for (const auto& [sym, m] : decls) out[sym] = event::to_string(m);
  return out;
}

std::vector<scene::SceneGraph> graphs_from(const json& data) {
  std::vector<scene::SceneGraph> out;
  for (const auto& g : data.at("graphs")) out.push_back(scene::SceneGraph::from_json(g));
  return out;
}

std::vector<narrative::EventNarrative> narratives_from(const json& data) {
  std::vector<narrative::EventNarrative> out;
  for (const auto& n : data.at("narratives")) out.push_back(narrative::EventNarrative::from_json(n));
  return out;
}

json vector_json(const std::vector<double>& v) { return json(v); }

}  // namespace

std::shared_ptr<const Resources> Resources::load(const std::filesystem::path& data_dir) {
  auto r = std::make_shared<Resources>();
  r->taxonomy = formula::LawTaxonomy::load(data_dir / "laws.json");
  r->kb = formula::KnowledgeBase::load(data_dir / "kb.json", &r->taxonomy);
  r->lexicon = narrative::Lexicon::load(data_dir);
  return r;
}

Pipeline::Pipeline(RunConfig config, backends::BackendSuite suite, std::shared_ptr<const Resources> resources,
                   std::optional<std::filesystem::path> artifacts_dir)
    : config_(std::move(config)),
      suite_(std::move(suite)),
      resources_(std::move(resources)),
      artifacts_dir_(std::move(artifacts_dir)) {
  config_.validate();
  if (!resources_) throw PreconditionError("pipeline: resources missing");
  if (artifacts_dir_) std::filesystem::create_directories(*artifacts_dir_);
}

RunManifest Pipeline::run() { return continue_from(RunManifest(config_.to_json(), config_.digest()), 0); }

RunManifest Pipeline::replay(const RunManifest& prior, std::string_view from_stage) {
  if (prior.config_digest() != config_.digest())
    throw ConfigError("replay: manifest was produced by a different configuration");
  const std::size_t first = stage_index(from_stage);
  RunManifest kept = prior.truncated_before(from_stage);
  for (std::size_t i = 0; i < first; ++i)
    if (!kept.find(kStages[i]) || kept.find(kStages[i])->status == StageStatus::kFailed)
      throw ManifestError(std::string("replay: upstream stage '") + kStages[i] + "' is not available");
  return continue_from(std::move(kept), first);
}

RunManifest Pipeline::continue_from(RunManifest manifest, std::size_t first_stage) {
  for (std::size_t i = first_stage; i < kStageCount; ++i) {
    const std::string name = kStages[i];
    StageRecord record;
    record.name = name;
    const std::size_t calls_before = suite_.call_log->entries().size();
    const auto start = std::chrono::steady_clock::now();
    try {
      StageReader in(manifest, name);
      bool skipped = false;
      record.data = compute(in, name, skipped);
      record.status = skipped ? StageStatus::kSkipped : StageStatus::kOk;
    } catch (const Error& e) {
      record.status = StageStatus::kFailed;
      record.data = json::object();
      record.error_code = e.code();
      record.error_message = e.what();
    } catch (const json::exception& e) {
      record.status = StageStatus::kFailed;
      record.data = json::object();
      record.error_code = "schema";
      record.error_message = e.what();
    }
    const auto entries = suite_.call_log->entries();
    record.calls.assign(entries.begin() + static_cast<std::ptrdiff_t>(calls_before), entries.end());
    manifest.timings_ms()[name] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const bool failed = record.status == StageStatus::kFailed;
    manifest.append(std::move(record));
    if (failed) break;
  }
  return manifest;
}

json Pipeline::compute(const StageReader& in, std::string_view stage, bool& skipped) {
  const auto& flags = config_.ablations;
  auto skip = [&](const char* why) {
    skipped = true;
    return json{{"skipped", why}};
  };
  if (stage == "law") return stage_law(in);
  if (stage == "formulas") return flags.pfg ? stage_formulas(in) : skip("pfg off");
  if (stage == "trajectory") return stage_trajectory(in);
  if (stage == "events") return stage_events(in);
  if (stage == "graphs") return stage_graphs(in);
  if (stage == "narratives") return stage_narratives(in);
  if (stage == "prompts") return stage_prompts(in);
  if (stage == "keyframes") return flags.iks ? stage_keyframes(in) : skip("iks off");
  if (stage == "schedule") return stage_schedule(in);
  if (stage == "package") return stage_package(in);
  if (stage == "denoise") return config_.emit_package_only ? skip("emit-package-only") : stage_denoise(in);
  throw ManifestError("no implementation for stage '" + std::string(stage) + "'");
}

json Pipeline::stage_law(const StageReader&) {
  json options = json::array();
  for (const auto& law : resources_->taxonomy.laws())
    options.push_back(
        {{"id", law.id}, {"name", law.name}, {"domain", formula::to_string(law.domain)}, {"description", law.description}});
  const json reply = backends::reason_task(*suite_.reasoner, Task::kClassifyLaw,
                                           {{"description", config_.input_description}, {"options", options}});
  const std::string id = reply.at("law").get<std::string>();
  const auto* law = resources_->taxonomy.find(id);
  if (!law) throw SchemaError("classify_law: '" + id + "' is not a known law");
  return {{"id", law->id}, {"name", law->name}, {"domain", formula::to_string(law->domain)}};
}

json Pipeline::stage_formulas(const StageReader& in) {
  const auto& law = resources_->taxonomy.at(in.data("law").at("id").get<std::string>());
  const auto& kb = resources_->kb;
  const std::string& desc = config_.input_description;
  std::vector<std::string> names =
      backends::reason_task(*suite_.reasoner, Task::kInferFormulaNames,
                            {{"description", desc}, {"law", law.id}, {"law_name", law.name}})
          .at("names")
          .get<std::vector<std::string>>();

  const formula::RetrievalOptions ro{config_.tau_match};
  const auto k = static_cast<std::size_t>(config_.top_k);
  auto result = formula::retrieve_topk(kb, names, law.id, k, ro);
  json rounds = json::array({{{"names", names}, {"best_score", result.best_score}}});

  std::vector<const formula::Formula*> candidates;
  for (const auto& f : kb.formulas())
    if (std::find(f.law_tags.begin(), f.law_tags.end(), law.id) != f.law_tags.end()) candidates.push_back(&f);
  formula::RetrievalFallback fallback(config_.max_fallback_rounds);
  json fallback_error = nullptr;
  while (result.below_threshold && fallback.rounds_used() < fallback.max_rounds()) {
    try {
      names = fallback.regenerate(law, candidates, desc, *suite_.reasoner);
    } catch (const FallbackExhaustedError& e) {
      fallback_error = e.what();
      break;
    }
    result = formula::retrieve_topk(kb, names, law.id, k, ro);
    rounds.push_back({{"names", names}, {"best_score", result.best_score}});
  }

  json ranked = json::array(), selected = json::array(), formulas = json::array();
  for (const auto& s : result.ranked) {
    ranked.push_back({{"id", s.formula->id}, {"score", s.score}, {"overlap", s.overlap}, {"cosine", s.cosine}});
    const bool take = result.below_threshold ? selected.empty() : s.score >= config_.tau_match;
    if (take) {
      selected.push_back(s.formula->id);
      formulas.push_back(formula::formula_to_json(*s.formula));
    }
  }
  return {{"kb_digest", kb.digest()},
          {"rounds", rounds},
          {"fallback_rounds", fallback.rounds_used()},
          {"fallback_error", fallback_error},
          {"below_threshold", result.below_threshold},
          {"ranked", ranked},
          {"selected", selected},
          {"formulas", formulas}};
}

json Pipeline::stage_trajectory(const StageReader& in) {
  const json& law = in.data("law");
  std::vector<formula::Formula> formulas;
  if (in.ran("formulas")) {
    for (const auto& id : in.data("formulas").at("selected")) {
      const auto* f = resources_->kb.find(id.get<std::string>());
      if (!f) throw ManifestError("formula '" + id.get<std::string>() + "' not in the knowledge base");
      formulas.push_back(*f);
    }
  }
  std::set<std::string> targets;
  for (const auto& f : formulas) targets.insert(f.target.symbol);
  std::map<std::string, formula::Dimension> declared;
  json variables = json::array();
  for (const auto& f : formulas) {
    for (const auto& v : f.variables) {
      if (targets.count(v.symbol) || declared.count(v.symbol)) continue;
      declared.emplace(v.symbol, v.dimension);
      variables.push_back({{"symbol", v.symbol},
                           {"unit", v.unit.empty() ? v.dimension.to_unit_string() : v.unit},
                           {"dimension", v.dimension.to_unit_string()},
                           {"description", v.description},
                           {"default", v.default_value ? formula::to_json(*v.default_value) : json(nullptr)}});
    }
  }
  auto quantity = [&](const std::string& sym, const json& j) {
    auto it = declared.find(sym);
    if (it != declared.end()) return formula::quantity_from_json(j, it->second);
    return j.is_number() ? formula::Quantity::dimensionless(j.get<double>()) : formula::quantity_from_json(j);
  };

  const std::string& desc = config_.input_description;
  const json proposed = backends::reason_task(*suite_.reasoner, Task::kProposeBindings,
                                              {{"description", desc}, {"law", law.at("id")}, {"variables", variables}});
  formula::Bindings bindings;
  for (const auto& [sym, q] : proposed.at("bindings").items()) bindings[sym] = quantity(sym, q);

  json formula_refs = json::array();
  for (const auto& f : formulas)
    formula_refs.push_back({{"id", f.id}, {"name", f.name}, {"target", f.target.symbol}, {"dsl", formula::to_dsl(f)}});
  const json dyn = backends::reason_task(*suite_.reasoner, Task::kPlanDynamics,
                                         {{"description", desc},
                                          {"law", law.at("id")},
                                          {"bindings", event::bindings_to_json(bindings)},
                                          {"formulas", formula_refs}});

  event::DynamicsSpec spec;
  std::set<std::string> assigned;
  for (const auto& obj : dyn.at("objects")) {
    const std::string id = obj.at("id").get<std::string>();
    spec.object_ids.push_back(id);
    auto& params = spec.initial[id];
    const json declared_params = obj.value("params", json::object());
    for (const auto& [sym, q] : declared_params.items()) params[sym] = quantity(sym, q);
    for (const auto& s : obj.value("symbols", json::array())) {
      const std::string sym = s.get<std::string>();
      if (params.count(sym)) continue;
      auto b = bindings.find(sym);
      if (b == bindings.end()) throw SchemaError("plan_dynamics: object '" + id + "' lists unbound symbol '" + sym + "'");
      params[sym] = b->second;
    }
    for (const auto& [sym, q] : params) assigned.insert(sym);
  }
  for (const auto& [sym, q] : bindings)
    if (!assigned.count(sym)) spec.constants[sym] = q;
  for (const auto& u : dyn.at("updates"))
    spec.updates.push_back({u.at("object").get<std::string>(), u.at("symbol").get<std::string>(),
                            u.at("mode") == "rate" ? event::UpdateMode::kRate : event::UpdateMode::kClosedForm,
                            u.at("expr").get<std::string>()});
  spec.horizon = dyn.at("horizon").get<double>();
  spec.step = dyn.at("step").get<double>();
  const auto decls = monotone_from_json(dyn.value("monotone", json::object()));

  const auto traj = event::simulate_trajectory(formulas, spec);
  return {{"bindings", event::bindings_to_json(bindings)},
          {"dynamics", dyn},
          {"monotone", monotone_to_json(decls)},
          {"trajectory", traj.to_json()},
          {"digest", traj.digest()}};
}

json Pipeline::stage_events(const StageReader& in) {
  const json& tr = in.data("trajectory");
  const auto traj = event::ParameterTrajectory::from_json(tr.at("trajectory"));
  const auto decls = monotone_from_json(tr.at("monotone"));
  std::vector<std::size_t> detected;
  std::vector<event::PhysicalCondition> chain;
  if (config_.ablations.ppd) {
    detected = event::detect_boundaries(traj, config_.tau_p, config_.min_gap);
    chain = event::segment(traj, detected, config_.max_events);
  } else {
    chain = event::segment(traj, {}, 1);
  }
  auto report = event::validate_continuity(chain, decls, config_.kappa);
  const json initial = report.to_json();
  if (!report.accepted()) {
    event::ValidationReport accepted;
    chain = event::reinfer_on_violation(report, std::move(chain), decls, *suite_.reasoner,
                                        {config_.max_retries, config_.kappa, config_.input_description}, &accepted);
    report = accepted;
  }
  json kept = json::array();
  for (std::size_t i = 1; i < chain.size(); ++i) kept.push_back(chain[i].first_sample);
  return {{"ppd", config_.ablations.ppd},
          {"detected_boundaries", detected},
          {"boundaries", kept},
          {"initial_report", initial},
          {"report", report.to_json()},
          {"chain", event::chain_to_json(chain, traj.digest())}};
}

json Pipeline::stage_graphs(const StageReader& in) {
  const json& ev = in.data("events");
  const auto chain = event::chain_from_json(ev.at("chain"));
  const auto object_ids =
      in.data("trajectory").at("trajectory").at("object_ids").get<std::vector<std::string>>();
  const std::string& desc = config_.input_description;

  std::vector<scene::SceneGraph> graphs{scene::init_graph(desc, *suite_.reasoner, object_ids)};
  json symbols = json::object();
  for (const auto& [obj, params] : chain.front().params)
    for (const auto& [sym, q] : params) symbols[obj].push_back(sym);
  const json reply =
      backends::reason_task(*suite_.reasoner, Task::kProposeUpdateRules,
                            {{"description", desc}, {"objects", symbols}, {"graph", graphs.front().to_json()}});
  const auto rules = scene::parse_rules(reply.at("rules").get<std::string>());

  json deltas = json::array();
  bool adds_nodes = false;
  for (std::size_t t = 1; t < chain.size(); ++t) {
    const auto delta = scene::derive_delta(graphs.back(), chain[t], rules, suite_.reasoner.get(),
                                           {desc, &chain[t - 1]});
    adds_nodes = adds_nodes || delta.adds_nodes();
    graphs.push_back(scene::apply_delta(graphs.back(), delta));
    deltas.push_back(delta.to_json());
  }
  json graph_json = json::array();
  std::vector<std::string> digests;
  for (const auto& g : graphs) {
    graph_json.push_back(g.to_json());
    digests.push_back(g.digest());
  }
  return {{"rules", scene::to_dsl(rules)},
          {"graphs", graph_json},
          {"graph_digests", digests},
          {"deltas", deltas},
          {"adds_nodes", adds_nodes},
          {"chain", event::chain_to_json(chain, ev.at("chain").at("trajectory_digest").get<std::string>(), digests)}};
}

json Pipeline::stage_narratives(const StageReader& in) {
  const auto chain = event::chain_from_json(in.data("events").at("chain"));
  const json& gr = in.data("graphs");
  const auto graphs = graphs_from(gr);
  std::vector<scene::GraphDelta> deltas;
  for (const auto& d : gr.at("deltas")) deltas.push_back(scene::GraphDelta::from_json(d));

  const auto decls = monotone_from_json(in.data("trajectory").at("monotone"));
  std::map<std::string, formula::Dimension> dims;
  for (const auto& [obj, params] : chain.front().params)
    for (const auto& [sym, q] : params) dims.emplace(sym, q.dimension);
  for (const auto& [sym, q] : chain.front().derived) dims.emplace(sym, q.dimension);
  const auto forbidden = narrative::forbidden_for(decls, dims, resources_->lexicon.direction);

  std::vector<std::string> warnings;
  const narrative::NarrativeOptions opts{config_.input_description, forbidden.stems, config_.minimality_fraction,
                                         &warnings};
  std::vector<narrative::EventNarrative> out;
  for (std::size_t t = 0; t < chain.size(); ++t) {
    if (t == 0 || !config_.ablations.pnr)
      out.push_back(narrative::describe(chain[t], graphs[t], *suite_.reasoner, opts));
    else
      out.push_back(narrative::revise(out.back(), chain[t], deltas[t - 1], graphs[t], *suite_.reasoner, opts));
  }
  json narratives = json::array();
  for (const auto& n : out) narratives.push_back(n.to_json());
  return {{"pnr", config_.ablations.pnr},
          {"narratives", narratives},
          {"forbidden", {{"words", forbidden.words}, {"stems", forbidden.stems}}},
          {"warnings", warnings}};
}

json Pipeline::stage_prompts(const StageReader& in) {
  const json& nr = in.data("narratives");
  const auto& lex = resources_->lexicon;
  const auto pair = narrative::condense(
      narratives_from(nr),
      {config_.token_budget, lex.connectives, lex.negative_phrases,
       nr.at("forbidden").at("words").get<std::vector<std::string>>()});
  const auto emb = narrative::embed_pair(pair, *suite_.text_encoder);
  return {{"pair", pair.to_json()},
          {"embedding",
           {{"dim", emb.positive_vec.size()},
            {"positive", vector_json(emb.positive_vec)},
            {"negative", vector_json(emb.negative_vec)},
            {"digest", json_digest(vector_json(emb.concatenated))}}}};
}

json Pipeline::stage_keyframes(const StageReader& in) {
  const auto traj = event::ParameterTrajectory::from_json(in.data("trajectory").at("trajectory"));
  const auto chain = event::chain_from_json(in.data("events").at("chain"));
  const auto graphs = graphs_from(in.data("graphs"));
  const auto narratives = narratives_from(in.data("narratives"));
  const event::Normalizer normalizer(traj);

  std::vector<std::string> warnings;
  const keyframe::OperatorOptions opts{config_.input_description, config_.operator_band, config_.d_min,
                                       config_.d_max, &warnings};
  std::vector<keyframe::EditOperator> ops;
  json operators = json::array(), spans = json::array();
  for (std::size_t t = 1; t < chain.size(); ++t) {
    auto plan = keyframe::plan_operator(chain[t - 1], graphs[t - 1], chain[t], graphs[t], *suite_.reasoner,
                                        normalizer, opts);
    operators.push_back(plan.op.to_json());
    spans.push_back(plan.span.d);
    ops.push_back(std::move(plan.op));
  }
  const std::string& first_prompt = narratives.front().text;
  const auto frames = keyframe::synthesize_keyframes(chain.size(), ops, first_prompt, *suite_.editor,
                                                     *suite_.images,
                                                     {config_.width, config_.height, chain.front().t_index});
  json keyframes = json::array();
  for (const auto& k : frames) {
    keyframes.push_back(k.to_json());
    if (artifacts_dir_) {
      const auto png = *artifacts_dir_ / (k.image.digest + ".png");
      if (!std::filesystem::exists(png)) {
        auto image = suite_.images->get(k.image);
        if (image) write_bytes(png, backends::encode_png(*image));
      }
    }
  }
  return {{"operators", operators},
          {"spans", spans},
          {"keyframes", keyframes},
          {"first_prompt", first_prompt},
          {"warnings", warnings}};
}

json Pipeline::stage_schedule(const StageReader& in) {
  auto& encoder = *suite_.latent_encoder;
  encoder.set_expected_shape(config_.width, config_.height);
  keyframe::LatentSchedule sched;
  json extra = json::object();
  if (in.ran("keyframes")) {
    const json& kf = in.data("keyframes");
    std::vector<keyframe::Keyframe> frames;
    for (const auto& k : kf.at("keyframes")) frames.push_back(keyframe::Keyframe::from_json(k));
    std::vector<keyframe::TimeSpan> spans;
    for (const auto& d : kf.at("spans")) spans.push_back({d.get<double>()});
    auto result = keyframe::build_schedule(
        frames, spans, encoder, *suite_.images,
        {config_.effective_sigma(), *config_.seed, config_.noise_mode, config_.latent_rate, config_.latent_frames()});
    sched = std::move(result.schedule);
    json latents = json::array();
    for (const auto& l : result.keyframe_latents) latents.push_back(json_digest(vector_json(l)));
    extra = {{"prior", "keyframes"}, {"keyframe_latent_digests", latents}};
  } else {
    sched = keyframe::pure_noise_schedule(config_.latent_frames(), encoder.dim(), *config_.seed);
    extra = {{"prior", "pure_noise"}};
  }
  const auto bytes = sched.serialize();
  const std::string digest = sha256_hex(bytes);
  schedules_[digest] = bytes;
  if (artifacts_dir_) write_bytes(*artifacts_dir_ / (digest + ".ccls"), bytes);
  json segments = json::array();
  for (const auto& [a, b] : sched.segment_index) segments.push_back({a, b});
  json out = {{"digest", digest},
              {"file", digest + ".ccls"},
              {"frame_count", sched.frames.size()},
              {"dim", sched.dim},
              {"sigma", sched.sigma},
              {"seed", sched.seed},
              {"noise_mode", keyframe::to_string(sched.mode)},
              {"multiplier", keyframe::noise_multiplier(sched.sigma, sched.mode)},
              {"segment_index", segments}};
  out.update(extra);
  return out;
}

json Pipeline::stage_package(const StageReader& in) {
  const json& pr = in.data("prompts");
  const json& sc = in.data("schedule");
  json narratives = json::array();
  for (const auto& n : in.data("narratives").at("narratives")) narratives.push_back(n.at("text"));
  json keyframes = json::array();
  if (in.ran("keyframes"))
    for (const auto& k : in.data("keyframes").at("keyframes")) keyframes.push_back(k.at("image").at("digest"));
  return {{"run_id", config_.digest()},
          {"law", in.data("law").at("id")},
          {"event_count", in.data("events").at("chain").at("events").size()},
          {"positive", pr.at("pair").at("positive")},
          {"negative", pr.at("pair").at("negative")},
          {"connectives_used", pr.at("pair").at("connectives_used")},
          {"event_narratives", narratives},
          {"embedding_digest", pr.at("embedding").at("digest")},
          {"schedule_digest", sc.at("digest")},
          {"schedule_file", sc.at("file")},
          {"keyframes", keyframes}};
}

std::vector<std::uint8_t> Pipeline::schedule_bytes(const std::string& digest) const {
  if (auto it = schedules_.find(digest); it != schedules_.end()) return it->second;
  if (artifacts_dir_) {
    auto bytes = read_bytes(*artifacts_dir_ / (digest + ".ccls"));
    if (!bytes.empty() && sha256_hex(bytes) == digest) return bytes;
  }
  throw ManifestError("schedule " + digest + " is not available");
}

json Pipeline::stage_denoise(const StageReader& in) {
  const json& pkg = in.data("package");
  const json& sc = in.data("schedule");
  const json& emb = in.data("prompts").at("embedding");
  backends::DenoiseRequest req;
  req.schedule_run_id = pkg.at("run_id").get<std::string>();
  req.embedding_run_id = pkg.at("run_id").get<std::string>();
  req.schedule_bytes = schedule_bytes(sc.at("digest").get<std::string>());
  req.frame_count = sc.at("frame_count").get<std::uint32_t>();
  req.dim = sc.at("dim").get<std::uint32_t>();
  req.sigma = sc.at("sigma").get<double>();
  req.seed = sc.at("seed").get<std::uint64_t>();
  req.positive = emb.at("positive").get<std::vector<double>>();
  req.negative = emb.at("negative").get<std::vector<double>>();
  const auto video = suite_.denoiser->denoise(req);
  return {{"uri", video.uri}, {"metadata", video.metadata}};
}

backends::BackendSuite make_suite_for(const RunConfig& config, const std::optional<std::filesystem::path>& image_dir) {
  backends::SuiteOptions opts;
  opts.seed = config.seed.value_or(0);
  opts.max_hue_shift = config.max_hue_shift;
  opts.cache_dir = config.cache_dir ? config.cache_dir : image_dir;
  if (config.backend == "mock") {
    const auto fixtures = config.fixtures ? *config.fixtures : config.resolved_data_dir() / "fixtures" / "scenarios.json";
    if (config.fixtures || std::filesystem::exists(fixtures)) opts.fixtures = fixtures;
  }
  return backends::make_suite(config.descriptors(), opts);
}

std::filesystem::path write_run(const RunManifest& manifest, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / "manifest.json";
  {
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump();
    if (!out) throw ManifestError("cannot write " + path.string());
  }
  std::ofstream timings(dir / "timings.json");
  timings << json(manifest.timings_ms()).dump(2) << "\n";
  return path;
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunManifest::from_json(j);
}

RunManifest run_config(const RunConfig& config, std::shared_ptr<const Resources> resources,
                       const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  std::optional<std::filesystem::path> artifacts;
  if (out_dir) artifacts = *out_dir / "artifacts";
  Pipeline p(config, make_suite_for(config, artifacts), std::move(resources), artifacts);
  auto manifest = p.run();
  if (out_dir) write_run(manifest, *out_dir);
  return manifest;
}

BatchResult run_batch(const RunConfig& base, const std::vector<std::string>& descriptions,
                      std::shared_ptr<const Resources> resources, const std::filesystem::path& out_dir, int parallel) {
  if (parallel < 1) throw ConfigError("parallel: must be >= 1");
  BatchResult result;
  result.manifests.resize(descriptions.size());
  result.paths.resize(descriptions.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < descriptions.size(); i = next++) {
      try {
        RunConfig c = base;
        c.input_description = descriptions[i];
        const auto dir = out_dir / ("run_" + std::to_string(i));
        result.manifests[i] = run_config(c, resources, dir);
        result.paths[i] = dir / "manifest.json";
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallel), std::max<std::size_t>(1, descriptions.size()));
  for (std::size_t i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return result;
}

}  // namespace cce::pipeline
