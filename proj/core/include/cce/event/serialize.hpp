#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/event/boundaries.hpp"

namespace cce::event {

nlohmann::json params_to_json(const ObjectParams& params);
ObjectParams params_from_json(const nlohmann::json& j);
nlohmann::json bindings_to_json(const formula::Bindings& b);
formula::Bindings bindings_from_json(const nlohmann::json& j);

nlohmann::json condition_to_json(const PhysicalCondition& c);
PhysicalCondition condition_from_json(const nlohmann::json& j);

/// `{events: [{t_index, time_span, params, derived, graph_ref}], trajectory_digest}`.
/// `graph_refs` may be empty (null refs) or one per condition.
nlohmann::json chain_to_json(const std::vector<PhysicalCondition>& chain,
                             const std::string& trajectory_digest,
                             const std::vector<std::string>& graph_refs = {});
std::vector<PhysicalCondition> chain_from_json(const nlohmann::json& j);

}  // namespace cce::event
