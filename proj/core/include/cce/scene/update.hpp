#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"
#include "cce/event/boundaries.hpp"
#include "cce/scene/graph.hpp"
#include "cce/scene/rules.hpp"

namespace cce::scene {

/// The condition change that caused a delta entry.
struct Provenance {
  std::string symbol;
  std::string object;
  std::string change;

  bool operator==(const Provenance&) const = default;
};

struct SetAttribute {
  std::string node;
  std::string attribute;
  /// Absent when the attribute did not exist.
  std::optional<AttributeValue> old_value;
  AttributeValue new_value;
  bool operator==(const SetAttribute&) const = default;
};
struct Relabel {
  std::string node;
  std::string old_label;
  std::string new_label;
  bool operator==(const Relabel&) const = default;
};
struct AddEdge {
  RelationEdge edge;
  bool operator==(const AddEdge&) const = default;
};
struct RemoveEdge {
  RelationEdge edge;
  bool operator==(const RemoveEdge&) const = default;
};
struct AddNode {
  ObjectNode node;
  bool operator==(const AddNode&) const = default;
};

using DeltaOp = std::variant<SetAttribute, Relabel, AddEdge, RemoveEdge, AddNode>;

struct DeltaEntry {
  DeltaOp op;
  Provenance provenance;
  bool operator==(const DeltaEntry&) const = default;
};

/// Ordered entries, applied in sequence. Concatenating two deltas composes
/// them.
struct GraphDelta {
  std::vector<DeltaEntry> entries;

  bool empty() const { return entries.empty(); }
  /// Node additions change the node-id set; callers surface this.
  bool adds_nodes() const;
  /// Entries touching `node` (as the written node or an edge endpoint).
  std::size_t touches(std::string_view node) const;

  nlohmann::json to_json() const;
  static GraphDelta from_json(const nlohmann::json& j);

  bool operator==(const GraphDelta&) const = default;
};

GraphDelta concat(const GraphDelta& a, const GraphDelta& b);

/// Initial graph from the backend, validated, t_index 1. `objects` are node
/// ids the graph is expected to cover (forwarded as context).
SceneGraph init_graph(const std::string& description, backends::ReasoningBackend& reasoner,
                      const std::vector<std::string>& objects = {});

struct DeriveOptions {
  std::string description;
  /// Condition of the previous event; edge triggers and residual detection
  /// need it.
  const event::PhysicalCondition* prev_cond = nullptr;
};

/// Rules fire first. Parameters that changed since prev_cond and that no
/// rule watches are sent to the backend (when given) as residual changes.
/// No-op writes are dropped.
GraphDelta derive_delta(const SceneGraph& prev, const event::PhysicalCondition& cond,
                        const std::vector<TriggerRule>& rules, backends::ReasoningBackend* reasoner,
                        const DeriveOptions& options = {});

/// Applies entries in order to a copy of prev; t_index + 1. Each entry's
/// old value must match the graph it is applied to (StaleDeltaError).
SceneGraph apply_delta(const SceneGraph& prev, const GraphDelta& delta);

}  // namespace cce::scene
