#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cce/formula/quantity.hpp"
#include "cce/scene/graph.hpp"

namespace cce::scene {

enum class TriggerKind {
  kGe,
  kGt,
  kLe,
  kLt,
  kCrossesUp,
  kCrossesDown,
  kCrosses,
  kChangesSign,
  kIncreases,
  kDecreases,
};

struct Trigger {
  std::string object;
  std::string symbol;
  TriggerKind kind = TriggerKind::kGe;
  /// Threshold in SI. Without a unit the number is read in the watched
  /// symbol's SI unit and `threshold_dimension` stays empty.
  double threshold = 0.0;
  std::optional<formula::Dimension> threshold_dimension;
  /// Source spelling of the threshold, kept for printing.
  std::string threshold_text;

  bool operator==(const Trigger&) const = default;
};

enum class ActionKind { kSet, kRelabel, kAddEdge, kRemoveEdge, kAddNode };

struct Action {
  ActionKind kind = ActionKind::kSet;
  /// Node written (set, relabel, add node) or edge source.
  std::string node;
  std::string attribute;
  AttributeValue value;
  /// Relabel / add-node label.
  std::string label;
  std::string relation;
  std::string target;

  bool operator==(const Action&) const = default;
};

/// `when <object>.<symbol> <trigger> -> <action> {, <action>}`.
struct TriggerRule {
  Trigger trigger;
  std::vector<Action> actions;

  bool operator==(const TriggerRule&) const = default;
};

/// Rules are separated by newlines or ';'. `#` starts a comment. See
/// docs/rule_dsl.ebnf.
std::vector<TriggerRule> parse_rules(std::string_view source);
std::string to_dsl(const TriggerRule& rule);
std::string to_dsl(const std::vector<TriggerRule>& rules);

}  // namespace cce::scene
