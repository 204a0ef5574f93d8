#include "cce/backends/schema.hpp"

#include "cce/error.hpp"

namespace cce::backends {
namespace {

using nlohmann::json;

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  throw SchemaError("schema uses unsupported type '" + type + "'");
}

void validate_at(const json& v, const json& schema, const std::string& path) {
  if (!schema.is_object()) throw SchemaError("schema at " + path + " is not an object");
  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = type_matches(v, it->get<std::string>());
    } else {
      for (const auto& t : *it) ok = ok || type_matches(v, t.get<std::string>());
    }
    if (!ok)
      throw SchemaError(path + ": expected type " + it->dump() + ", got " +
                        std::string(v.type_name()));
  }
  if (auto it = schema.find("enum"); it != schema.end()) {
    bool ok = false;
    for (const auto& option : *it) ok = ok || option == v;
    if (!ok) throw SchemaError(path + ": value " + v.dump() + " not in " + it->dump());
  }
  if (v.is_string()) {
    if (auto it = schema.find("minLength");
        it != schema.end() && v.get<std::string>().size() < it->get<std::size_t>())
      throw SchemaError(path + ": string shorter than " + it->dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (auto it = schema.find("minimum"); it != schema.end() && x < it->get<double>())
      throw SchemaError(path + ": " + v.dump() + " < minimum " + it->dump());
    if (auto it = schema.find("maximum"); it != schema.end() && x > it->get<double>())
      throw SchemaError(path + ": " + v.dump() + " > maximum " + it->dump());
  }
  if (v.is_object()) {
    if (auto it = schema.find("required"); it != schema.end()) {
      for (const auto& key : *it)
        if (!v.contains(key.get<std::string>()))
          throw SchemaError(path + ": missing required property '" +
                            key.get<std::string>() + "'");
    }
    const auto props = schema.find("properties");
    for (const auto& [key, child] : v.items()) {
      if (props != schema.end() && props->contains(key)) {
        validate_at(child, props->at(key), path + "/" + key);
        continue;
      }
      if (auto ap = schema.find("additionalProperties"); ap != schema.end()) {
        if (ap->is_boolean() && !ap->get<bool>())
          throw SchemaError(path + ": unexpected property '" + key + "'");
        if (ap->is_object()) validate_at(child, *ap, path + "/" + key);
      }
    }
  }
  if (v.is_array()) {
    if (auto it = schema.find("minItems"); it != schema.end() && v.size() < it->get<std::size_t>())
      throw SchemaError(path + ": fewer than " + it->dump() + " items");
    if (auto it = schema.find("maxItems"); it != schema.end() && v.size() > it->get<std::size_t>())
      throw SchemaError(path + ": more than " + it->dump() + " items");
    if (auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < v.size(); ++i)
        validate_at(v[i], *it, path + "/" + std::to_string(i));
    }
  }
}

json string_list(int min_items = 1) {
  return {{"type", "array"}, {"minItems", min_items}, {"items", {{"type", "string"}, {"minLength", 1}}}};
}

json quantity_like() {
  return {{"type", json::array({"number", "object"})},
          {"properties", {{"value", {{"type", "number"}}}, {"unit", {{"type", "string"}}}}}};
}

json graph_schema() {
  json node = {{"type", "object"},
               {"required", json::array({"id", "label"})},
               {"properties",
                {{"id", {{"type", "string"}, {"minLength", 1}}},
                 {"label", {{"type", "string"}, {"minLength", 1}}},
                 {"attributes", {{"type", "object"}}}}}};
  json edge = {{"type", "object"},
               {"required", json::array({"source", "target", "relation"})},
               {"properties",
                {{"source", {{"type", "string"}}},
                 {"target", {{"type", "string"}}},
                 {"relation", {{"type", "string"}, {"minLength", 1}}},
                 {"attributes", {{"type", "object"}}}}}};
  return {{"type", "object"},
          {"required", json::array({"nodes", "edges"})},
          {"properties",
           {{"nodes", {{"type", "array"}, {"minItems", 1}, {"items", node}}},
            {"edges", {{"type", "array"}, {"items", edge}}}}}};
}

json build_schema(Task task) {
  switch (task) {
    case Task::kClassifyLaw:
      return {{"type", "object"},
              {"required", json::array({"law"})},
              {"properties", {{"law", {{"type", "string"}, {"minLength", 1}}}}}};
    case Task::kInferFormulaNames:
    case Task::kRegenerateFormulaNames:
      return {{"type", "object"}, {"required", json::array({"names"})}, {"properties", {{"names", string_list()}}}};
    case Task::kProposeBindings:
      return {{"type", "object"},
              {"required", json::array({"bindings"})},
              {"properties", {{"bindings", {{"type", "object"}, {"additionalProperties", quantity_like()}}}}}};
    case Task::kPlanDynamics: {
      json object = {{"type", "object"},
                     {"required", json::array({"id"})},
                     {"properties",
                      {{"id", {{"type", "string"}, {"minLength", 1}}},
                       {"symbols", string_list(0)},
                       {"params", {{"type", "object"}, {"additionalProperties", quantity_like()}}}}}};
      json update = {{"type", "object"},
                     {"required", json::array({"object", "symbol", "mode", "expr"})},
                     {"properties",
                      {{"object", {{"type", "string"}}},
                       {"symbol", {{"type", "string"}}},
                       {"mode", {{"enum", json::array({"closed_form", "rate"})}}},
                       {"expr", {{"type", "string"}, {"minLength", 1}}}}}};
      return {{"type", "object"},
              {"required", json::array({"objects", "updates", "horizon", "step"})},
              {"properties",
               {{"objects", {{"type", "array"}, {"minItems", 1}, {"items", object}}},
                {"updates", {{"type", "array"}, {"minItems", 1}, {"items", update}}},
                {"monotone", {{"type", "object"},
                              {"additionalProperties", {{"enum", json::array({"increasing", "decreasing", "free"})}}}}},
                {"horizon", {{"type", "number"}, {"minimum", 0}}},
                {"step", {{"type", "number"}, {"minimum", 0}}}}}};
    }
    case Task::kInitSceneGraph:
      return graph_schema();
    case Task::kProposeUpdateRules:
      return {{"type", "object"}, {"required", json::array({"rules"})}, {"properties", {{"rules", {{"type", "string"}}}}}};
    case Task::kResidualGraphChanges: {
      json entry = {{"type", "object"},
                    {"required", json::array({"op", "provenance"})},
                    {"properties",
                     {{"op", {{"enum", json::array({"set_attribute", "relabel", "add_edge", "remove_edge"})}}},
                      {"provenance", {{"type", "object"}, {"required", json::array({"symbol", "object"})}}}}}};
      return {{"type", "object"},
              {"required", json::array({"entries"})},
              {"properties", {{"entries", {{"type", "array"}, {"items", entry}}}}}};
    }
    case Task::kRepairParameter:
      return {{"type", "object"}, {"required", json::array({"value"})}, {"properties", {{"value", quantity_like()}}}};
    case Task::kDescribeEvent:
    case Task::kReviseNarrative:
      return {{"type", "object"},
              {"required", json::array({"text"})},
              {"properties", {{"text", {{"type", "string"}, {"minLength", 1}}}}}};
    case Task::kPlanOperator:
      return {{"type", "object"},
              {"required", json::array({"kind", "target_node", "region", "magnitude", "duration", "instruction"})},
              {"properties",
               {{"kind", {{"enum", json::array({"drag", "mask_inpaint", "recolor", "resize", "relight"})}}},
                {"target_node", {{"type", "string"}, {"minLength", 1}}},
                {"region", {{"type", "object"}}},
                {"magnitude", {{"type", "number"}}},
                {"duration", {{"type", "number"}}},
                {"instruction", {{"type", "string"}}},
                {"attributes", {{"type", "object"}}}}}};
  }
  throw PreconditionError("unregistered task");
}

}  // namespace

void validate_schema(const json& value, const json& schema) { validate_at(value, schema, ""); }

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kClassifyLaw: return "classify_law";
    case Task::kInferFormulaNames: return "infer_formula_names";
    case Task::kRegenerateFormulaNames: return "regenerate_formula_names";
    case Task::kProposeBindings: return "propose_bindings";
    case Task::kPlanDynamics: return "plan_dynamics";
    case Task::kInitSceneGraph: return "init_scene_graph";
    case Task::kProposeUpdateRules: return "propose_update_rules";
    case Task::kResidualGraphChanges: return "residual_graph_changes";
    case Task::kRepairParameter: return "repair_parameter";
    case Task::kDescribeEvent: return "describe_event";
    case Task::kReviseNarrative: return "revise_narrative";
    case Task::kPlanOperator: return "plan_operator";
  }
  return "";
}

Task task_from_name(std::string_view name) {
  for (Task t : kAllTasks)
    if (task_name(t) == name) return t;
  throw SchemaError("unknown task '" + std::string(name) + "'");
}

const json& task_schema(Task task) {
  static const auto* schemas = [] {
    auto* m = new std::map<Task, json>();
    for (Task t : kAllTasks) (*m)[t] = build_schema(t);
    return m;
  }();
  return schemas->at(task);
}

json reason_task(ReasoningBackend& backend, Task task, json payload) {
  return backend.reason(ReasonTask{std::string(task_name(task)), std::move(payload)},
                        task_schema(task));
}

}  // namespace cce::backends
