#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"
#include "cce/event/boundaries.hpp"
#include "cce/scene/graph.hpp"

namespace cce::keyframe {

enum class OperatorKind { kDrag, kMaskInpaint, kRecolor, kResize, kRelight };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(std::string_view s);

/// Normalized rectangle in image coordinates; drags add a displacement
/// vector (dx, dy) applied to the rectangle.
struct Region {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;
  double dx = 0.0;
  double dy = 0.0;

  /// Empty when the rectangle and its displaced copy lie inside [0,1]².
  std::vector<std::string> problems() const;

  nlohmann::json to_json() const;
  static Region from_json(const nlohmann::json& j);
  bool operator==(const Region&) const = default;
};

struct EditOperator {
  OperatorKind kind = OperatorKind::kRecolor;
  std::string target_node;
  Region region;
  double magnitude = 0.0;
  std::pair<double, double> bounds{0.0, 0.0};
  std::string instruction;
  /// Kind-specific parameters (target_color, fill_color, direction).
  nlohmann::json attributes = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EditOperator from_json(const nlohmann::json& j);
  bool operator==(const EditOperator&) const = default;
};

struct TimeSpan {
  double d = 1.0;
};

/// Normalized parameter-delta norm between two conditions, over the
/// parameters of one object.
double node_delta(const event::PhysicalCondition& prev, const event::PhysicalCondition& cond,
                  const std::string& object_id, const event::Normalizer& normalizer);

/// (max(0, δ(1-band)), min(1, δ(1+band))), clamped into [0, 1].
std::pair<double, double> operator_bounds(double delta, double band = 0.2);

struct OperatorOptions {
  std::string description;
  double band = 0.2;
  double d_min = 0.25;
  double d_max = 10.0;
  std::vector<std::string>* warnings = nullptr;
};

struct OperatorPlan {
  EditOperator op;
  TimeSpan span;
};

OperatorPlan plan_operator(const event::PhysicalCondition& prev_cond, const scene::SceneGraph& prev_graph,
                           const event::PhysicalCondition& cond, const scene::SceneGraph& graph,
                           backends::ReasoningBackend& reasoner, const event::Normalizer& normalizer,
                           const OperatorOptions& options = {});

}  // namespace cce::keyframe
