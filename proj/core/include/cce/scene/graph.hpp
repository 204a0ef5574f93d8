#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/formula/quantity.hpp"

namespace cce::scene {

/// Categorical attributes are strings ("liquid", "red"); measured ones are
/// quantities.
using AttributeValue = std::variant<std::string, formula::Quantity>;
using Attributes = std::map<std::string, AttributeValue, std::less<>>;

nlohmann::json attribute_to_json(const AttributeValue& v);
/// Strings stay strings, bare numbers become dimensionless quantities,
/// `{value, unit}` objects become quantities.
AttributeValue attribute_from_json(const nlohmann::json& j);
std::string attribute_text(const AttributeValue& v);

struct ObjectNode {
  std::string id;
  std::string label;
  Attributes attributes;

  bool operator==(const ObjectNode&) const = default;
};

struct RelationEdge {
  std::string source;
  std::string target;
  std::string relation;
  Attributes attributes;

  bool same_key(const RelationEdge& o) const {
    return source == o.source && target == o.target && relation == o.relation;
  }
  bool operator==(const RelationEdge&) const = default;
};

/// Immutable-by-convention value: every update produces a new graph.
struct SceneGraph {
  int t_index = 1;
  /// Keyed by node id.
  std::map<std::string, ObjectNode, std::less<>> nodes;
  /// Sorted by (source, target, relation).
  std::vector<RelationEdge> edges;

  /// Throws GraphSchemaError naming the violated invariant: empty or
  /// mismatched node ids, dangling edge endpoints, self-loops, duplicate
  /// (source, target, relation).
  void validate() const;

  const ObjectNode* find_node(std::string_view id) const;
  const RelationEdge* find_edge(std::string_view source, std::string_view target,
                                std::string_view relation) const;
  /// Label, or the `name` attribute when present: the word a narrative uses.
  std::vector<std::string> surface_names() const;

  nlohmann::json to_json() const;
  /// Validates before returning.
  static SceneGraph from_json(const nlohmann::json& j, int t_index = 1);
  std::string digest() const;

  bool operator==(const SceneGraph&) const = default;
};

/// Equality ignoring t_index.
bool same_content(const SceneGraph& a, const SceneGraph& b);

}  // namespace cce::scene
