#include "cce/backends/mock_reasoner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "cce/error.hpp"

namespace cce::backends {

using nlohmann::json;

namespace {

std::set<std::string> words(const std::string& text) {
  std::set<std::string> out;
  std::string w;
  for (char ch : text + " ") {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else {
      if (w.size() >= 3) out.insert(w);
      w.clear();
    }
  }
  return out;
}

const json& scenario_task(const json* scenario, const std::string& kind) {
  static const json kNull;
  if (!scenario || !scenario->contains("tasks")) return kNull;
  const auto& tasks = scenario->at("tasks");
  auto it = tasks.find(kind);
  return it == tasks.end() ? kNull : *it;
}

json classify_law(const json& p) {
  const auto desc = words(p.value("description", std::string()));
  std::string best;
  std::size_t best_hits = 0;
  for (const auto& opt : p.value("options", json::array())) {
    const auto vocab = words(opt.value("name", std::string()) + " " + opt.value("description", std::string()));
    std::size_t hits = 0;
    for (const auto& w : desc) hits += vocab.count(w);
    if (best.empty() || hits > best_hits) {
      best = opt.at("id").get<std::string>();
      best_hits = hits;
    }
  }
  if (best.empty()) throw BackendError("classify_law: no options offered");
  return {{"law", best}};
}

json propose_bindings(const json& p) {
  json out = json::object();
  for (const auto& v : p.value("variables", json::array())) {
    const std::string sym = v.at("symbol").get<std::string>();
    if (v.contains("default") && !v.at("default").is_null())
      out[sym] = v.at("default");
    else
      out[sym] = {{"value", 1.0}, {"unit", v.value("unit", std::string("1"))}};
  }
  return {{"bindings", out}};
}

json plan_dynamics(const json& p) {
  json params = json::object();
  std::vector<std::string> symbols;
  const json bindings = p.value("bindings", json::object());
  for (const auto& [sym, q] : bindings.items()) {
    params[sym] = q;
    symbols.push_back(sym);
  }
  if (symbols.empty()) {
    params["x"] = {{"value", 1.0}, {"unit", "1"}};
    symbols.push_back("x");
  }
  const std::string& s = symbols.front();
  return {{"objects", json::array({{{"id", "system"}, {"symbols", symbols}, {"params", params}}})},
          {"updates", json::array({{{"object", "system"},
                                    {"symbol", s},
                                    {"mode", "closed_form"},
                                    {"expr", "if(t >= 1[s], 2 * " + s + ", " + s + ")"}}})},
          {"monotone", json::object()},
          {"horizon", 2.0},
          {"step", 0.1}};
}

json init_scene_graph(const json& p) {
  json nodes = json::array();
  for (const auto& id : p.value("objects", json::array()))
    nodes.push_back({{"id", id}, {"label", id}, {"attributes", json::object()}});
  if (nodes.empty()) nodes.push_back({{"id", "scene"}, {"label", "scene"}, {"attributes", json::object()}});
  return {{"nodes", nodes}, {"edges", json::array()}};
}

json residual_changes(const json& p) {
  std::set<std::string> nodes;
  for (const auto& n : p.value("graph", json::object()).value("nodes", json::array()))
    nodes.insert(n.at("id").get<std::string>());
  json entries = json::array();
  for (const auto& c : p.value("changes", json::array())) {
    const std::string object = c.at("object").get<std::string>();
    if (!nodes.count(object)) continue;
    const std::string change = c.value("change", std::string("increase"));
    entries.push_back({{"op", "set_attribute"},
                       {"node", object},
                       {"attribute", c.at("symbol").get<std::string>() + "_trend"},
                       {"value", change == "decrease" ? "falling" : "rising"},
                       {"provenance", {{"symbol", c.at("symbol")}, {"object", object}, {"change", change}}}});
  }
  return {{"entries", entries}};
}

json repair_parameter(const json& p) {
  auto value_of = [&](const char* key) -> std::optional<double> {
    auto it = p.find(key);
    if (it == p.end() || it->is_null()) return std::nullopt;
    return it->is_number() ? it->get<double>() : it->at("value").get<double>();
  };
  const auto prev = value_of("previous"), next = value_of("next"), before = value_of("before_previous");
  double v;
  if (prev && next)
    v = 0.5 * (*prev + *next);
  else if (prev && before)
    v = *prev + 0.5 * (*prev - *before);
  else if (prev)
    v = *prev;
  else if (next)
    v = *next;
  else
    v = value_of("observed").value_or(0.0);
  return {{"value", {{"value", v}, {"unit", p.value("unit", std::string("1"))}}}};
}

std::string strip_period(std::string s) {
  while (!s.empty() && (s.back() == '.' || std::isspace(static_cast<unsigned char>(s.back())))) s.pop_back();
  return s;
}

std::string attr_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

json describe_event(const json& p, const json* scenario) {
  const int t = p.value("t_index", 1);
  const json& fixture = scenario_task(scenario, "describe_event");
  if (fixture.is_object() && fixture.contains(std::to_string(t)))
    return {{"text", fixture.at(std::to_string(t))}};
  if (t == 1) return {{"text", strip_period(p.value("description", std::string("a scene")))}};
  std::vector<std::string> clauses;
  for (const auto& n : p.value("graph", json::object()).value("nodes", json::array())) {
    std::string clause = "the " + n.at("label").get<std::string>();
    std::vector<std::string> states;
    const json attributes = n.value("attributes", json::object());
    for (const auto& [k, v] : attributes.items())
      if (v.is_string()) states.push_back(v.get<std::string>());
    for (std::size_t i = 0; i < states.size(); ++i) clause += (i == 0 ? " is " : " and ") + states[i];
    clauses.push_back(clause);
  }
  std::string text;
  for (const auto& c : clauses) text += (text.empty() ? "" : ", ") + c;
  return {{"text", text.empty() ? std::string("the scene") : text}};
}

bool replace_word(std::string& text, const std::string& from, const std::string& to) {
  if (from.empty()) return false;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    const std::size_t end = pos + from.size();
    const bool right = end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
    if (left && right) {
      text.replace(pos, from.size(), to);
      return true;
    }
    pos = end;
  }
  return false;
}

json revise_narrative(const json& p, const json* scenario) {
  std::string text = p.value("previous_text", std::string());
  const json& clauses = scenario_task(scenario, "revise_narrative");
  for (const auto& c : p.value("changes", json::array())) {
    const std::string attribute = c.value("attribute", std::string());
    const std::string label = c.value("label", c.value("node", std::string("object")));
    const std::string old_v = c.contains("old") ? attr_text(c.at("old")) : "";
    const std::string new_v = c.contains("new") ? attr_text(c.at("new")) : "";
    const std::string key = attribute + "=" + new_v;
    if (clauses.is_object() && clauses.contains(key)) {
      const std::string clause = clauses.at(key).get<std::string>();
      if (text.find(clause) == std::string::npos) text += ", " + clause;
      continue;
    }
    if (c.value("kind", std::string()) == "add_edge") {
      text += ", the " + label + " " + c.value("relation", std::string("touches")) + " the " +
              c.value("target_label", std::string("object"));
      continue;
    }
    if (c.value("kind", std::string()) == "remove_edge") continue;
    if (c.value("kind", std::string()) == "add_node") {
      text += ", a " + new_v + " appears";
      continue;
    }
    if (!c.contains("new") || !c.at("new").is_string()) continue;
    if (attribute == "label") {
      if (!replace_word(text, old_v, new_v)) text += ", the " + old_v + " becomes " + new_v;
      continue;
    }
    if (!replace_word(text, old_v, new_v)) text += ", the " + label + " becomes " + new_v;
  }
  for (const auto& name : p.value("surface_names", json::array())) {
    const std::string n = name.get<std::string>();
    if (text.find(n) == std::string::npos) text += ", the " + n + " remains";
  }
  return {{"text", text}};
}

bool has_any(const std::string& s, std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (s.find(k) != std::string::npos) return true;
  return false;
}

json plan_operator(const json& p, const json* scenario) {
  const auto& candidates = p.at("candidates");
  if (candidates.empty()) throw BackendError("plan_operator: no candidate nodes");
  const json* best = &candidates[0];
  for (const auto& c : candidates)
    if (c.value("delta", 0.0) > best->value("delta", 0.0)) best = &c;
  const std::string node = best->at("node").get<std::string>();
  const std::string label = best->value("label", node);
  const json attrs = best->value("changed_attributes", json::object());
  json op = {{"target_node", node},
             {"magnitude", best->value("delta", 0.0)},
             {"duration", p.value("suggested_duration", 1.0)},
             {"attributes", json::object()}};
  const json changed = best->value("changed_symbols", json::array());
  const std::string direction =
      changed.empty() ? std::string("increase") : changed[0].value("change", std::string("increase"));
  std::string symbols;
  for (const auto& s : changed) symbols += s.at("symbol").get<std::string>() + " ";
  const json center = {{"x", 0.25}, {"y", 0.25}, {"w", 0.5}, {"h", 0.5}};
  if (attrs.contains("color")) {
    op["kind"] = "recolor";
    op["region"] = {{"x", 0.0}, {"y", 0.0}, {"w", 1.0}, {"h", 1.0}};
    op["attributes"]["target_color"] = attrs.at("color").at("new");
  } else if (attrs.contains("phase") || attrs.contains("label")) {
    op["kind"] = "mask_inpaint";
    op["region"] = center;
    op["attributes"]["fill_color"] = "clear";
  } else if (has_any(symbols, {"depth", "pos", "height", "x ", "y ", "ext", "len", "dist"})) {
    op["kind"] = "drag";
    op["region"] = center;
    op["region"]["dx"] = 0.0;
    op["region"]["dy"] = direction == "decrease" ? -0.25 : 0.25;
  } else if (has_any(symbols, {"r ", "rad", "vol", "V ", "size", "area"})) {
    op["kind"] = "resize";
    op["region"] = center;
    op["attributes"]["direction"] = direction == "decrease" ? "shrink" : "grow";
  } else if (has_any(symbols, {"I ", "lum", "bright", "theta", "angle"})) {
    op["kind"] = "relight";
    op["region"] = center;
    op["attributes"]["direction"] = direction == "decrease" ? "darken" : "brighten";
  } else {
    op["kind"] = "recolor";
    op["region"] = center;
  }
  const json& overrides = scenario_task(scenario, "plan_operator");
  if (overrides.is_object()) {
    const std::string t = std::to_string(p.value("t_index", 0));
    if (overrides.contains(t)) op.merge_patch(overrides.at(t));
  }
  op["instruction"] = op.at("kind").get<std::string>() + " the " + label +
                      (symbols.empty() ? std::string() : " as " + symbols.substr(0, symbols.size() - 1) +
                                                             " changes");
  return op;
}

}  // namespace

json default_reasoning(const ReasonTask& task, const json* scenario) {
  const json& p = task.payload;
  const std::string& k = task.kind;
  if (k == "classify_law") return classify_law(p);
  if (k == "infer_formula_names") return {{"names", json::array({p.value("law_name", p.value("law", std::string("law")))})}};
  if (k == "regenerate_formula_names") {
    const auto& c = p.value("candidates", json::array());
    if (c.empty()) throw BackendError("regenerate_formula_names: no candidates");
    return {{"names", json::array({c[0]})}};
  }
  if (k == "propose_bindings") return propose_bindings(p);
  if (k == "plan_dynamics") return plan_dynamics(p);
  if (k == "init_scene_graph") return init_scene_graph(p);
  if (k == "propose_update_rules") return {{"rules", ""}};
  if (k == "residual_graph_changes") return residual_changes(p);
  if (k == "repair_parameter") return repair_parameter(p);
  if (k == "describe_event") return describe_event(p, scenario);
  if (k == "revise_narrative") return revise_narrative(p, scenario);
  if (k == "plan_operator") return plan_operator(p, scenario);
  throw BackendError("mock reasoner: no default for task '" + k + "'");
}

MockReasoner::MockReasoner(json scenarios) : scenarios_(std::move(scenarios)) {
  if (!scenarios_.is_array()) throw ConfigError("mock scenarios must be a JSON array");
  for (const auto& s : scenarios_)
    if (!s.contains("match") || !s.at("match").is_string())
      throw ConfigError("mock scenario without a 'match' string");
}

json MockReasoner::load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock fixtures " + path.string());
  return json::parse(in);
}

void MockReasoner::add_exact(const std::string& kind, const json& payload, json response) {
  std::lock_guard lock(mu_);
  exact_[idempotency_key(kind, payload)] = std::move(response);
}

void MockReasoner::add_handler(const std::string& kind, Handler handler) {
  std::lock_guard lock(mu_);
  handlers_[kind].push_back(std::move(handler));
}

std::map<std::string, int> MockReasoner::call_counts() const {
  std::lock_guard lock(mu_);
  return counts_;
}

const json* MockReasoner::scenario_for(const json& payload) const {
  const std::string desc = payload.value("description", std::string());
  if (desc.empty()) return nullptr;
  for (const auto& s : scenarios_)
    if (desc.find(s.at("match").get<std::string>()) != std::string::npos) return &s;
  return nullptr;
}

json MockReasoner::do_reason(const ReasonTask& task, const json&) {
  std::vector<Handler> handlers;
  {
    std::lock_guard lock(mu_);
    ++counts_[task.kind];
    if (auto it = exact_.find(idempotency_key(task.kind, task.payload)); it != exact_.end())
      return it->second;
    if (auto it = handlers_.find(task.kind); it != handlers_.end()) handlers = it->second;
  }
  for (const auto& h : handlers)
    if (auto out = h(task)) return *out;
  const json* scenario = scenario_for(task.payload);
  const json& fixed = scenario_task(scenario, task.kind);
  static const std::set<std::string> kDynamic = {"describe_event", "revise_narrative", "plan_operator",
                                                 "residual_graph_changes", "repair_parameter",
                                                 "regenerate_formula_names"};
  if (!fixed.is_null() && !kDynamic.count(task.kind)) return fixed;
  return default_reasoning(task, scenario);
}

}  // namespace cce::backends
