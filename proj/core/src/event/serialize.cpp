#include "cce/event/serialize.hpp"

#include "cce/error.hpp"

namespace cce::event {

using nlohmann::json;

json bindings_to_json(const formula::Bindings& b) {
  json out = json::object();
  for (const auto& [sym, q] : b) out[sym] = formula::to_json(q);
  return out;
}

formula::Bindings bindings_from_json(const json& j) {
  formula::Bindings out;
  for (const auto& [sym, q] : j.items()) out.emplace(sym, formula::quantity_from_json(q));
  return out;
}

json params_to_json(const ObjectParams& params) {
  json out = json::object();
  for (const auto& [obj, b] : params) out[obj] = bindings_to_json(b);
  return out;
}

ObjectParams params_from_json(const json& j) {
  ObjectParams out;
  for (const auto& [obj, b] : j.items()) out.emplace(obj, bindings_from_json(b));
  return out;
}

json condition_to_json(const PhysicalCondition& c) {
  return {{"t_index", c.t_index},
          {"time_span", json::array({c.start, c.end})},
          {"sample_span", json::array({c.first_sample, c.end_sample})},
          {"params", params_to_json(c.params)},
          {"derived", bindings_to_json(c.derived)}};
}

PhysicalCondition condition_from_json(const json& j) {
  PhysicalCondition c;
  c.t_index = j.at("t_index").get<int>();
  c.start = j.at("time_span").at(0).get<double>();
  c.end = j.at("time_span").at(1).get<double>();
  if (j.contains("sample_span")) {
    c.first_sample = j.at("sample_span").at(0).get<std::size_t>();
    c.end_sample = j.at("sample_span").at(1).get<std::size_t>();
  }
  c.params = params_from_json(j.at("params"));
  c.derived = bindings_from_json(j.value("derived", json::object()));
  return c;
}

json chain_to_json(const std::vector<PhysicalCondition>& chain, const std::string& trajectory_digest,
                   const std::vector<std::string>& graph_refs) {
  if (!graph_refs.empty() && graph_refs.size() != chain.size())
    throw PreconditionError("chain_to_json: one graph ref per condition required");
  json events = json::array();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    json e = condition_to_json(chain[i]);
    e["graph_ref"] = graph_refs.empty() ? json(nullptr) : json(graph_refs[i]);
    events.push_back(std::move(e));
  }
  return {{"events", events}, {"trajectory_digest", trajectory_digest}};
}

std::vector<PhysicalCondition> chain_from_json(const json& j) {
  std::vector<PhysicalCondition> out;
  for (const auto& e : j.at("events")) out.push_back(condition_from_json(e));
  return out;
}

}  // namespace cce::event
