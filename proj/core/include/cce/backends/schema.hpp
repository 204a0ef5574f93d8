#pragma once

#include <array>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"

namespace cce::backends {

/// Validates `value` against a JSON-Schema subset: type (string or list),
/// properties, required, additionalProperties (bool), items, minItems,
/// maxItems, enum, minLength, minimum, maximum. Throws SchemaError naming
/// the failing JSON pointer.
void validate_schema(const nlohmann::json& value, const nlohmann::json& schema);

/// Every structured request the engine sends to a reasoning backend.
enum class Task {
  kClassifyLaw,
  kInferFormulaNames,
  kRegenerateFormulaNames,
  kProposeBindings,
  kPlanDynamics,
  kInitSceneGraph,
  kProposeUpdateRules,
  kResidualGraphChanges,
  kRepairParameter,
  kDescribeEvent,
  kReviseNarrative,
  kPlanOperator,
};

inline constexpr std::array kAllTasks = {
    Task::kClassifyLaw,          Task::kInferFormulaNames,
    Task::kRegenerateFormulaNames, Task::kProposeBindings,
    Task::kPlanDynamics,         Task::kInitSceneGraph,
    Task::kProposeUpdateRules,   Task::kResidualGraphChanges,
    Task::kRepairParameter,      Task::kDescribeEvent,
    Task::kReviseNarrative,      Task::kPlanOperator,
};

std::string_view task_name(Task task);
Task task_from_name(std::string_view name);
const nlohmann::json& task_schema(Task task);

/// The only sanctioned way to call a reasoning backend: looks up the
/// registered output schema for `task`.
nlohmann::json reason_task(ReasoningBackend& backend, Task task,
                           nlohmann::json payload);

}  // namespace cce::backends
