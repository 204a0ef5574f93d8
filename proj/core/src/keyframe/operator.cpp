#include "cce/keyframe/operator.hpp"

#include <algorithm>
#include <cmath>

#include "cce/backends/schema.hpp"
#include "cce/error.hpp"

namespace cce::keyframe {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-12;

struct KindName {
  OperatorKind kind;
  const char* name;
};
constexpr KindName kKinds[] = {{OperatorKind::kDrag, "drag"},
                               {OperatorKind::kMaskInpaint, "mask_inpaint"},
                               {OperatorKind::kRecolor, "recolor"},
                               {OperatorKind::kResize, "resize"},
                               {OperatorKind::kRelight, "relight"}};

bool inside_unit(double v) { return std::isfinite(v) && v >= -kEps && v <= 1.0 + kEps; }

json node_candidate(const std::string& id, const scene::ObjectNode& node, const scene::SceneGraph& prev_graph,
                    const event::PhysicalCondition& prev, const event::PhysicalCondition& cond,
                    const event::Normalizer& normalizer) {
  json changed = json::array();
  auto p = prev.params.find(id);
  auto c = cond.params.find(id);
  if (p != prev.params.end() && c != cond.params.end()) {
    for (const auto& [sym, q] : c->second) {
      auto old = p->second.find(sym);
      if (old == p->second.end() || old->second.value == q.value) continue;
      changed.push_back({{"symbol", sym}, {"change", q.value > old->second.value ? "increase" : "decrease"}});
    }
  }
  json attrs = json::object();
  const auto* before = prev_graph.find_node(id);
  if (!before) {
    attrs["label"] = {{"old", nullptr}, {"new", node.label}};
  } else {
    if (before->label != node.label) attrs["label"] = {{"old", before->label}, {"new", node.label}};
    for (const auto& [name, value] : node.attributes) {
      auto it = before->attributes.find(name);
      if (it != before->attributes.end() && it->second == value) continue;
      attrs[name] = {{"old", it == before->attributes.end() ? json(nullptr) : scene::attribute_to_json(it->second)},
                     {"new", scene::attribute_to_json(value)}};
    }
  }
  return {{"node", id},
          {"label", node.label},
          {"delta", node_delta(prev, cond, id, normalizer)},
          {"changed_symbols", changed},
          {"changed_attributes", attrs}};
}

}  // namespace

std::string to_string(OperatorKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "recolor";
}

OperatorKind operator_kind_from_string(std::string_view s) {
  for (const auto& k : kKinds)
    if (s == k.name) return k.kind;
  throw SchemaError("unknown operator kind '" + std::string(s) + "'");
}

std::vector<std::string> Region::problems() const {
  std::vector<std::string> out;
  auto check = [&](const char* name, double v) {
    if (!inside_unit(v)) out.push_back(std::string("region.") + name + " = " + std::to_string(v) + " outside [0,1]");
  };
  check("x", x);
  check("y", y);
  check("w", w);
  check("h", h);
  if (out.empty()) {
    check("x+w", x + w);
    check("y+h", y + h);
    if (!std::isfinite(dx) || !std::isfinite(dy)) {
      out.push_back("region displacement is not finite");
    } else if (dx != 0.0 || dy != 0.0) {
      check("x+dx", x + dx);
      check("y+dy", y + dy);
      check("x+w+dx", x + w + dx);
      check("y+h+dy", y + h + dy);
    }
  }
  return out;
}

json Region::to_json() const {
  json j = {{"x", x}, {"y", y}, {"w", w}, {"h", h}};
  if (dx != 0.0 || dy != 0.0) {
    j["dx"] = dx;
    j["dy"] = dy;
  }
  return j;
}

Region Region::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("region must be an object");
  auto num = [&](const char* k, double fallback) {
    if (!j.contains(k)) return fallback;
    if (!j.at(k).is_number()) throw SchemaError(std::string("region.") + k + " must be a number");
    return j.at(k).get<double>();
  };
  return {num("x", 0.0), num("y", 0.0), num("w", 1.0), num("h", 1.0), num("dx", 0.0), num("dy", 0.0)};
}

json EditOperator::to_json() const {
  return {{"kind", to_string(kind)},
          {"target_node", target_node},
          {"region", region.to_json()},
          {"magnitude", magnitude},
          {"bounds", {bounds.first, bounds.second}},
          {"instruction", instruction},
          {"attributes", attributes}};
}

EditOperator EditOperator::from_json(const json& j) {
  EditOperator op;
  op.kind = operator_kind_from_string(j.at("kind").get<std::string>());
  op.target_node = j.at("target_node").get<std::string>();
  op.region = Region::from_json(j.at("region"));
  op.magnitude = j.at("magnitude").get<double>();
  op.bounds = {j.at("bounds").at(0).get<double>(), j.at("bounds").at(1).get<double>()};
  op.instruction = j.at("instruction").get<std::string>();
  op.attributes = j.value("attributes", json::object());
  return op;
}

double node_delta(const event::PhysicalCondition& prev, const event::PhysicalCondition& cond,
                  const std::string& object_id, const event::Normalizer& normalizer) {
  auto p = prev.params.find(object_id);
  auto c = cond.params.find(object_id);
  if (p == prev.params.end() || c == cond.params.end()) return 0.0;
  double sum = 0.0;
  for (const auto& [sym, q] : c->second) {
    auto old = p->second.find(sym);
    if (old == p->second.end()) continue;
    const event::FeatureKey key{object_id, sym};
    const double d = normalizer.normalize(key, q.value) - normalizer.normalize(key, old->second.value);
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::pair<double, double> operator_bounds(double delta, double band) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw PreconditionError("operator_bounds: delta must be finite and >= 0");
  if (band < 0.0 || band > 1.0) throw PreconditionError("operator_bounds: band must lie in [0, 1]");
  const double lo = std::clamp(delta * (1.0 - band), 0.0, 1.0);
  const double hi = std::clamp(delta * (1.0 + band), 0.0, 1.0);
  return {lo, hi};
}

OperatorPlan plan_operator(const event::PhysicalCondition& prev_cond, const scene::SceneGraph& prev_graph,
                           const event::PhysicalCondition& cond, const scene::SceneGraph& graph,
                           backends::ReasoningBackend& reasoner, const event::Normalizer& normalizer,
                           const OperatorOptions& options) {
  if (cond.t_index != prev_cond.t_index + 1)
    throw PreconditionError("plan_operator: events " + std::to_string(prev_cond.t_index) + " and " +
                            std::to_string(cond.t_index) + " are not consecutive");
  if (prev_graph.t_index != prev_cond.t_index || graph.t_index != cond.t_index)
    throw PreconditionError("plan_operator: graphs do not match the conditions' t_index");
  if (!(options.d_min > 0.0) || options.d_max < options.d_min)
    throw PreconditionError("plan_operator: need 0 < d_min <= d_max");

  json candidates = json::array();
  for (const auto& [id, node] : graph.nodes)
    candidates.push_back(node_candidate(id, node, prev_graph, prev_cond, cond, normalizer));
  const double suggested = cond.end - cond.start;
  json payload = {{"description", options.description},
                  {"t_index", cond.t_index},
                  {"candidates", candidates},
                  {"suggested_duration", suggested},
                  {"kinds", json::array({"drag", "mask_inpaint", "recolor", "resize", "relight"})}};

  auto warn = [&](const std::string& msg) {
    if (options.warnings) options.warnings->push_back("event " + std::to_string(cond.t_index) + ": " + msg);
  };

  json reply;
  std::vector<std::string> problems;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!problems.empty()) {
      std::string msg;
      for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
      payload["violation"] = msg;
    }
    reply = backends::reason_task(reasoner, backends::Task::kPlanOperator, payload);
    problems = Region::from_json(reply.at("region")).problems();
    if (problems.empty()) break;
  }
  if (!problems.empty()) throw BackendError("plan_operator: region rejected after retry: " + problems.front());

  OperatorPlan plan;
  EditOperator& op = plan.op;
  op.target_node = reply.at("target_node").get<std::string>();
  if (!graph.find_node(op.target_node)) throw UnknownNodeError("plan_operator: unknown node '" + op.target_node + "'");
  op.kind = operator_kind_from_string(reply.at("kind").get<std::string>());
  op.region = Region::from_json(reply.at("region"));
  op.instruction = reply.at("instruction").get<std::string>();
  op.attributes = reply.value("attributes", json::object());
  op.bounds = operator_bounds(node_delta(prev_cond, cond, op.target_node, normalizer), options.band);

  double proposed = reply.at("magnitude").get<double>();
  if (!std::isfinite(proposed)) proposed = op.bounds.first;
  op.magnitude = std::clamp(proposed, op.bounds.first, op.bounds.second);
  if (op.magnitude != proposed)
    warn("magnitude " + std::to_string(proposed) + " clamped to " + std::to_string(op.magnitude));
  if (op.bounds.second == 0.0) {
    op.kind = OperatorKind::kRecolor;
    op.region = Region{};
    op.magnitude = 0.0;
  }

  double d = reply.at("duration").get<double>();
  if (!std::isfinite(d)) d = suggested;
  const double clamped = std::clamp(d, options.d_min, options.d_max);
  if (clamped != d) warn("duration " + std::to_string(d) + " clamped to " + std::to_string(clamped));
  plan.span.d = clamped;
  return plan;
}

}  // namespace cce::keyframe
