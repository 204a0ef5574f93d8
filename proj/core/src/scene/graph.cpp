#include "cce/scene/graph.hpp"

#include <algorithm>
#include <set>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::scene {

using nlohmann::json;

json attribute_to_json(const AttributeValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return formula::to_json(std::get<formula::Quantity>(v));
}

AttributeValue attribute_from_json(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return formula::Quantity::dimensionless(j.get<double>());
  if (j.is_object()) return formula::quantity_from_json(j);
  throw GraphSchemaError("attribute value must be a string, number or {value, unit}: " + j.dump());
}

std::string attribute_text(const AttributeValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return formula::to_string(std::get<formula::Quantity>(v));
}

namespace {

json attributes_to_json(const Attributes& a) {
  json out = json::object();
  for (const auto& [k, v] : a) out[k] = attribute_to_json(v);
  return out;
}

Attributes attributes_from_json(const json& j) {
  Attributes out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw GraphSchemaError("attributes must be an object");
  for (const auto& [k, v] : j.items()) out.emplace(k, attribute_from_json(v));
  return out;
}

bool edge_less(const RelationEdge& a, const RelationEdge& b) {
  return std::tie(a.source, a.target, a.relation) < std::tie(b.source, b.target, b.relation);
}

}  // namespace

void SceneGraph::validate() const {
  if (nodes.empty()) throw GraphSchemaError("graph has no nodes");
  for (const auto& [id, node] : nodes) {
    if (id.empty()) throw GraphSchemaError("node with empty id");
    if (id != node.id) throw GraphSchemaError("node key '" + id + "' does not match id '" + node.id + "'");
    if (node.label.empty()) throw GraphSchemaError("node '" + id + "' has an empty label");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!nodes.count(e.source))
      throw GraphSchemaError("edge " + e.source + " -" + e.relation + "-> " + e.target + ": unknown source node");
    if (!nodes.count(e.target))
      throw GraphSchemaError("edge " + e.source + " -" + e.relation + "-> " + e.target + ": unknown target node");
    if (e.source == e.target) throw GraphSchemaError("self-loop on '" + e.source + "'");
    if (e.relation.empty()) throw GraphSchemaError("edge with empty relation");
    for (std::size_t k = 0; k < i; ++k)
      if (edges[k].same_key(e))
        throw GraphSchemaError("duplicate edge " + e.source + " -" + e.relation + "-> " + e.target);
  }
}

const ObjectNode* SceneGraph::find_node(std::string_view id) const {
  auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : &it->second;
}

const RelationEdge* SceneGraph::find_edge(std::string_view source, std::string_view target,
                                          std::string_view relation) const {
  for (const auto& e : edges)
    if (e.source == source && e.target == target && e.relation == relation) return &e;
  return nullptr;
}

std::vector<std::string> SceneGraph::surface_names() const {
  std::vector<std::string> out;
  for (const auto& [id, node] : nodes) {
    auto it = node.attributes.find("name");
    if (it != node.attributes.end() && std::holds_alternative<std::string>(it->second))
      out.push_back(std::get<std::string>(it->second));
    else
      out.push_back(node.label);
  }
  return out;
}

json SceneGraph::to_json() const {
  json n = json::array(), e = json::array();
  for (const auto& [id, node] : nodes)
    n.push_back({{"id", id}, {"label", node.label}, {"attributes", attributes_to_json(node.attributes)}});
  for (const auto& edge : edges)
    e.push_back({{"source", edge.source},
                 {"target", edge.target},
                 {"relation", edge.relation},
                 {"attributes", attributes_to_json(edge.attributes)}});
  return {{"t_index", t_index}, {"nodes", n}, {"edges", e}};
}

SceneGraph SceneGraph::from_json(const json& j, int t_index) {
  SceneGraph g;
  g.t_index = j.value("t_index", t_index);
  if (!j.contains("nodes") || !j.at("nodes").is_array()) throw GraphSchemaError("graph needs a 'nodes' array");
  for (const auto& n : j.at("nodes")) {
    ObjectNode node{n.at("id").get<std::string>(), n.at("label").get<std::string>(),
                    attributes_from_json(n.value("attributes", json::object()))};
    const std::string id = node.id;
    if (!g.nodes.emplace(id, std::move(node)).second) throw GraphSchemaError("duplicate node id '" + id + "'");
  }
  for (const auto& e : j.value("edges", json::array()))
    g.edges.push_back({e.at("source").get<std::string>(), e.at("target").get<std::string>(),
                       e.at("relation").get<std::string>(), attributes_from_json(e.value("attributes", json()))});
  g.validate();
  std::sort(g.edges.begin(), g.edges.end(), edge_less);
  return g;
}

std::string SceneGraph::digest() const { return json_digest(to_json()); }

bool same_content(const SceneGraph& a, const SceneGraph& b) { return a.nodes == b.nodes && a.edges == b.edges; }

}  // namespace cce::scene
