#include "cce/scene/update.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "cce/backends/schema.hpp"
#include "cce/error.hpp"
#include "cce/event/serialize.hpp"

namespace cce::scene {

using nlohmann::json;

namespace {

json attrs_json(const Attributes& a) {
  json out = json::object();
  for (const auto& [k, v] : a) out[k] = attribute_to_json(v);
  return out;
}

Attributes attrs_from(const json& j) {
  Attributes out;
  for (const auto& [k, v] : j.items()) out.emplace(k, attribute_from_json(v));
  return out;
}

json provenance_json(const Provenance& p) {
  return {{"symbol", p.symbol}, {"object", p.object}, {"change", p.change}};
}

RelationEdge edge_from(const json& j) {
  return {j.at("source").get<std::string>(), j.at("target").get<std::string>(),
          j.at("relation").get<std::string>(), attrs_from(j.value("attributes", json::object()))};
}

json edge_json(const RelationEdge& e) {
  return {{"source", e.source}, {"target", e.target}, {"relation", e.relation}, {"attributes", attrs_json(e.attributes)}};
}

bool edge_less(const RelationEdge& a, const RelationEdge& b) {
  return std::tie(a.source, a.target, a.relation) < std::tie(b.source, b.target, b.relation);
}

std::string trigger_text(const Trigger& t) {
  const std::string dsl = to_dsl(TriggerRule{t, {}});
  const std::size_t b = dsl.find(' ', 5) + 1;
  return dsl.substr(b, dsl.size() - b - 3);
}

bool fires(const Trigger& t, double cur, std::optional<double> prev) {
  const double th = t.threshold;
  switch (t.kind) {
    case TriggerKind::kGe: return cur >= th;
    case TriggerKind::kGt: return cur > th;
    case TriggerKind::kLe: return cur <= th;
    case TriggerKind::kLt: return cur < th;
    default: break;
  }
  if (!prev) return false;
  const double p = *prev;
  switch (t.kind) {
    case TriggerKind::kCrossesUp: return p < th && cur >= th;
    case TriggerKind::kCrossesDown: return p > th && cur <= th;
    case TriggerKind::kCrosses: return (p < th && cur >= th) || (p > th && cur <= th);
    case TriggerKind::kChangesSign: return (p < 0.0) != (cur < 0.0) && p != 0.0 && cur != 0.0;
    case TriggerKind::kIncreases: return cur > p;
    case TriggerKind::kDecreases: return cur < p;
    default: return false;
  }
}

/// Tracks the graph as entries accumulate so no-ops and conflicts are
/// judged against the state each entry will actually meet.
class DeltaBuilder {
 public:
  explicit DeltaBuilder(const SceneGraph& base) : graph_(base) {}

  /// Returns false when the write was a no-op. Throws RuleConflictError when
  /// the same target was already written with a different value.
  void add(DeltaOp op, Provenance prov, bool from_rule) {
    const std::string key = key_of(op);
    const std::string val = value_of(op);
    if (auto it = written_.find(key); it != written_.end()) {
      if (it->second.value == val) return;
      if (from_rule && it->second.from_rule)
        throw RuleConflictError("rules write conflicting values to " + key + ": '" + it->second.value + "' vs '" +
                                val + "' (" + it->second.origin + " / " + prov.symbol + ")");
      if (!from_rule) return;
    }
    written_[key] = {val, from_rule, prov.symbol};
    if (!fill_and_check(op)) return;
    delta_.entries.push_back({op, std::move(prov)});
    graph_ = apply_delta(graph_, GraphDelta{{delta_.entries.back()}});
  }

  GraphDelta take() { return std::move(delta_); }
  const SceneGraph& graph() const { return graph_; }

 private:
  struct Written {
    std::string value;
    bool from_rule;
    std::string origin;
  };

  static std::string key_of(const DeltaOp& op) {
    if (const auto* s = std::get_if<SetAttribute>(&op)) return "attribute " + s->node + "." + s->attribute;
    if (const auto* r = std::get_if<Relabel>(&op)) return "label of " + r->node;
    if (const auto* a = std::get_if<AddEdge>(&op))
      return "edge " + a->edge.source + " " + a->edge.relation + " " + a->edge.target;
    if (const auto* d = std::get_if<RemoveEdge>(&op))
      return "edge " + d->edge.source + " " + d->edge.relation + " " + d->edge.target;
    return "node " + std::get<AddNode>(op).node.id;
  }

  static std::string value_of(const DeltaOp& op) {
    if (const auto* s = std::get_if<SetAttribute>(&op)) return attribute_to_json(s->new_value).dump();
    if (const auto* r = std::get_if<Relabel>(&op)) return r->new_label;
    if (std::holds_alternative<AddEdge>(op)) return "present";
    if (std::holds_alternative<RemoveEdge>(op)) return "absent";
    return std::get<AddNode>(op).node.label;
  }

  /// Fills old values from the running graph; false for no-ops.
  bool fill_and_check(DeltaOp& op) {
    if (auto* s = std::get_if<SetAttribute>(&op)) {
      const ObjectNode* n = graph_.find_node(s->node);
      if (!n) throw GraphSchemaError("update writes unknown node '" + s->node + "'");
      auto it = n->attributes.find(s->attribute);
      if (it != n->attributes.end()) {
        if (it->second == s->new_value) return false;
        s->old_value = it->second;
      } else {
        s->old_value.reset();
      }
      return true;
    }
    if (auto* r = std::get_if<Relabel>(&op)) {
      const ObjectNode* n = graph_.find_node(r->node);
      if (!n) throw GraphSchemaError("relabel of unknown node '" + r->node + "'");
      r->old_label = n->label;
      return r->old_label != r->new_label;
    }
    if (auto* a = std::get_if<AddEdge>(&op)) {
      if (!graph_.find_node(a->edge.source) || !graph_.find_node(a->edge.target))
        throw GraphSchemaError("edge " + a->edge.source + " -" + a->edge.relation + "-> " + a->edge.target +
                               " names an unknown node");
      return !graph_.find_edge(a->edge.source, a->edge.target, a->edge.relation);
    }
    if (auto* d = std::get_if<RemoveEdge>(&op)) {
      const RelationEdge* e = graph_.find_edge(d->edge.source, d->edge.target, d->edge.relation);
      if (!e) return false;
      d->edge = *e;
      return true;
    }
    return !graph_.find_node(std::get<AddNode>(op).node.id);
  }

  SceneGraph graph_;
  GraphDelta delta_;
  std::map<std::string, Written> written_;
};

DeltaOp action_op(const Action& a) {
  switch (a.kind) {
    case ActionKind::kSet: return SetAttribute{a.node, a.attribute, std::nullopt, a.value};
    case ActionKind::kRelabel: return Relabel{a.node, "", a.label};
    case ActionKind::kAddEdge: return AddEdge{{a.node, a.target, a.relation, {}}};
    case ActionKind::kRemoveEdge: return RemoveEdge{{a.node, a.target, a.relation, {}}};
    case ActionKind::kAddNode: return AddNode{{a.node, a.label, {}}};
  }
  throw PreconditionError("unknown action kind");
}

bool cond_has_symbol(const event::PhysicalCondition& cond, const std::string& symbol) {
  if (cond.derived.count(symbol)) return true;
  for (const auto& [obj, b] : cond.params)
    if (b.count(symbol)) return true;
  return false;
}

DeltaOp residual_op(const json& e) {
  const std::string op = e.at("op").get<std::string>();
  if (op == "set_attribute")
    return SetAttribute{e.at("node").get<std::string>(), e.at("attribute").get<std::string>(), std::nullopt,
                        attribute_from_json(e.at("value"))};
  if (op == "relabel") return Relabel{e.at("node").get<std::string>(), "", e.at("label").get<std::string>()};
  if (op == "add_edge") return AddEdge{edge_from(e)};
  return RemoveEdge{edge_from(e)};
}

}  // namespace

bool GraphDelta::adds_nodes() const {
  return std::any_of(entries.begin(), entries.end(),
                     [](const DeltaEntry& e) { return std::holds_alternative<AddNode>(e.op); });
}

std::size_t GraphDelta::touches(std::string_view node) const {
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (const auto* s = std::get_if<SetAttribute>(&e.op)) n += s->node == node;
    if (const auto* r = std::get_if<Relabel>(&e.op)) n += r->node == node;
    if (const auto* a = std::get_if<AddEdge>(&e.op)) n += a->edge.source == node || a->edge.target == node;
    if (const auto* d = std::get_if<RemoveEdge>(&e.op)) n += d->edge.source == node || d->edge.target == node;
    if (const auto* a = std::get_if<AddNode>(&e.op)) n += a->node.id == node;
  }
  return n;
}

json GraphDelta::to_json() const {
  json out = json::array();
  for (const auto& e : entries) {
    json j;
    if (const auto* s = std::get_if<SetAttribute>(&e.op)) {
      j = {{"op", "set_attribute"},
           {"node", s->node},
           {"attribute", s->attribute},
           {"old", s->old_value ? attribute_to_json(*s->old_value) : json(nullptr)},
           {"new", attribute_to_json(s->new_value)}};
    } else if (const auto* r = std::get_if<Relabel>(&e.op)) {
      j = {{"op", "relabel"}, {"node", r->node}, {"old", r->old_label}, {"new", r->new_label}};
    } else if (const auto* a = std::get_if<AddEdge>(&e.op)) {
      j = edge_json(a->edge);
      j["op"] = "add_edge";
    } else if (const auto* d = std::get_if<RemoveEdge>(&e.op)) {
      j = edge_json(d->edge);
      j["op"] = "remove_edge";
    } else {
      const auto& n = std::get<AddNode>(e.op).node;
      j = {{"op", "add_node"}, {"id", n.id}, {"label", n.label}, {"attributes", attrs_json(n.attributes)}};
    }
    j["provenance"] = provenance_json(e.provenance);
    out.push_back(std::move(j));
  }
  return {{"entries", out}, {"adds_nodes", adds_nodes()}};
}

GraphDelta GraphDelta::from_json(const json& j) {
  GraphDelta d;
  for (const auto& e : j.at("entries")) {
    const std::string op = e.at("op").get<std::string>();
    const auto& p = e.at("provenance");
    Provenance prov{p.at("symbol").get<std::string>(), p.at("object").get<std::string>(),
                    p.value("change", std::string())};
    DeltaOp o;
    if (op == "set_attribute") {
      std::optional<AttributeValue> old;
      if (!e.at("old").is_null()) old = attribute_from_json(e.at("old"));
      o = SetAttribute{e.at("node").get<std::string>(), e.at("attribute").get<std::string>(), old,
                       attribute_from_json(e.at("new"))};
    } else if (op == "relabel") {
      o = Relabel{e.at("node").get<std::string>(), e.at("old").get<std::string>(), e.at("new").get<std::string>()};
    } else if (op == "add_edge") {
      o = AddEdge{edge_from(e)};
    } else if (op == "remove_edge") {
      o = RemoveEdge{edge_from(e)};
    } else if (op == "add_node") {
      o = AddNode{{e.at("id").get<std::string>(), e.at("label").get<std::string>(),
                   attrs_from(e.value("attributes", json::object()))}};
    } else {
      throw GraphSchemaError("unknown delta op '" + op + "'");
    }
    d.entries.push_back({std::move(o), std::move(prov)});
  }
  return d;
}

GraphDelta concat(const GraphDelta& a, const GraphDelta& b) {
  GraphDelta out = a;
  out.entries.insert(out.entries.end(), b.entries.begin(), b.entries.end());
  return out;
}

SceneGraph init_graph(const std::string& description, backends::ReasoningBackend& reasoner,
                      const std::vector<std::string>& objects) {
  if (description.empty()) throw PreconditionError("init_graph: empty description");
  const json out = backends::reason_task(reasoner, backends::Task::kInitSceneGraph,
                                         {{"description", description}, {"objects", objects}});
  SceneGraph g = SceneGraph::from_json(out, 1);
  g.t_index = 1;
  return g;
}

GraphDelta derive_delta(const SceneGraph& prev, const event::PhysicalCondition& cond,
                        const std::vector<TriggerRule>& rules, backends::ReasoningBackend* reasoner,
                        const DeriveOptions& options) {
  if (prev.t_index != cond.t_index - 1)
    throw PreconditionError("derive_delta: graph t_index " + std::to_string(prev.t_index) +
                            " does not precede condition " + std::to_string(cond.t_index));
  const event::PhysicalCondition* pc = options.prev_cond;
  if (pc && pc->t_index != cond.t_index - 1)
    throw PreconditionError("derive_delta: previous condition has t_index " + std::to_string(pc->t_index));

  DeltaBuilder builder(prev);
  std::set<event::FeatureKey> watched;
  for (const auto& rule : rules) {
    const Trigger& t = rule.trigger;
    const event::FeatureKey key{t.object, t.symbol};
    watched.insert(key);
    const formula::Quantity* cur = cond.find(key);
    if (!cur)
      throw PreconditionError("rule watches '" + t.object + "." + t.symbol + "', absent from condition " +
                              std::to_string(cond.t_index));
    if (t.threshold_dimension && !(*t.threshold_dimension == cur->dimension))
      throw DimensionError("rule threshold '" + t.threshold_text + "' is [" + t.threshold_dimension->to_unit_string() +
                           "], '" + t.object + "." + t.symbol + "' is [" + cur->dimension.to_unit_string() + "]");
    std::optional<double> before;
    if (pc)
      if (const formula::Quantity* q = pc->find(key)) before = q->value;
    if (!fires(t, cur->value, before)) continue;
    const Provenance prov{t.symbol, t.object, trigger_text(t)};
    for (const auto& a : rule.actions) builder.add(action_op(a), prov, true);
  }

  if (pc && reasoner) {
    json changes = json::array();
    for (const auto& [obj, b] : cond.params)
      for (const auto& [sym, q] : b) {
        if (watched.count({obj, sym})) continue;
        const formula::Quantity* old = pc->find({obj, sym});
        if (!old || old->value == q.value) continue;
        changes.push_back({{"object", obj},
                           {"symbol", sym},
                           {"old", formula::to_json(*old)},
                           {"new", formula::to_json(q)},
                           {"change", q.value > old->value ? "increase" : "decrease"}});
      }
    if (!changes.empty()) {
      const json out = backends::reason_task(
          *reasoner, backends::Task::kResidualGraphChanges,
          {{"description", options.description}, {"t_index", cond.t_index}, {"graph", builder.graph().to_json()},
           {"changes", changes}});
      for (const auto& e : out.at("entries")) {
        const auto& p = e.at("provenance");
        Provenance prov{p.at("symbol").get<std::string>(), p.at("object").get<std::string>(),
                        p.value("change", std::string())};
        if (!cond_has_symbol(cond, prov.symbol))
          throw SchemaError("residual change cites symbol '" + prov.symbol + "' absent from condition " +
                            std::to_string(cond.t_index));
        builder.add(residual_op(e), std::move(prov), false);
      }
    }
  }
  return builder.take();
}

SceneGraph apply_delta(const SceneGraph& prev, const GraphDelta& delta) {
  SceneGraph g = prev;
  g.t_index = prev.t_index + 1;
  for (const auto& entry : delta.entries) {
    if (entry.provenance.symbol.empty()) throw PreconditionError("delta entry without provenance");
    if (const auto* s = std::get_if<SetAttribute>(&entry.op)) {
      auto n = g.nodes.find(s->node);
      if (n == g.nodes.end()) throw StaleDeltaError("delta updates absent node '" + s->node + "'");
      auto& attrs = n->second.attributes;
      auto it = attrs.find(s->attribute);
      const bool matches = s->old_value ? (it != attrs.end() && it->second == *s->old_value) : it == attrs.end();
      if (!matches)
        throw StaleDeltaError("old value of '" + s->node + "." + s->attribute + "' does not match the graph");
      attrs.insert_or_assign(s->attribute, s->new_value);
    } else if (const auto* r = std::get_if<Relabel>(&entry.op)) {
      auto n = g.nodes.find(r->node);
      if (n == g.nodes.end()) throw StaleDeltaError("delta relabels absent node '" + r->node + "'");
      if (n->second.label != r->old_label)
        throw StaleDeltaError("node '" + r->node + "' is labelled '" + n->second.label + "', delta expects '" +
                              r->old_label + "'");
      n->second.label = r->new_label;
    } else if (const auto* a = std::get_if<AddEdge>(&entry.op)) {
      if (!g.nodes.count(a->edge.source) || !g.nodes.count(a->edge.target))
        throw StaleDeltaError("delta adds an edge to an absent node");
      if (g.find_edge(a->edge.source, a->edge.target, a->edge.relation))
        throw StaleDeltaError("delta adds an existing edge");
      g.edges.push_back(a->edge);
      std::sort(g.edges.begin(), g.edges.end(), edge_less);
    } else if (const auto* d = std::get_if<RemoveEdge>(&entry.op)) {
      auto it = std::find_if(g.edges.begin(), g.edges.end(), [&](const RelationEdge& e) { return e.same_key(d->edge); });
      if (it == g.edges.end()) throw StaleDeltaError("delta removes an absent edge");
      g.edges.erase(it);
    } else {
      const auto& n = std::get<AddNode>(entry.op).node;
      if (g.nodes.count(n.id)) throw StaleDeltaError("delta adds existing node '" + n.id + "'");
      g.nodes.emplace(n.id, n);
    }
  }
  g.validate();
  return g;
}

}  // namespace cce::scene
