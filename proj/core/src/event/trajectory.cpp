#include "cce/event/trajectory.hpp"

#include <cmath>
#include <set>

#include "cce/error.hpp"
#include "cce/event/serialize.hpp"
#include "cce/util/digest.hpp"

namespace cce::event {

using formula::Dimension;
using formula::Quantity;

void ParameterTrajectory::validate() const {
  if (samples.empty()) return;
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].time > samples[i - 1].time))
      throw PreconditionError("trajectory times not strictly increasing at sample " + std::to_string(i));
  auto schema = [](const TrajectorySample& s) {
    std::vector<std::tuple<std::string, std::string, Dimension>> out;
    for (const auto& [obj, b] : s.params)
      for (const auto& [sym, q] : b) out.emplace_back(obj, sym, q.dimension);
    for (const auto& [sym, q] : s.derived) out.emplace_back(kDerivedObject, sym, q.dimension);
    return out;
  };
  const auto first = schema(samples.front());
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (schema(samples[i]) != first)
      throw PreconditionError("trajectory sample " + std::to_string(i) + " changes the parameter schema");
  for (const auto& [obj, b] : samples.front().params) {
    (void)b;
    if (std::find(object_ids.begin(), object_ids.end(), obj) == object_ids.end())
      throw PreconditionError("trajectory parameters for undeclared object '" + obj + "'");
  }
}

nlohmann::json ParameterTrajectory::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& sample : samples)
    s.push_back({{"t", sample.time}, {"params", params_to_json(sample.params)},
                 {"derived", bindings_to_json(sample.derived)}});
  return {{"object_ids", object_ids}, {"samples", s}};
}

ParameterTrajectory ParameterTrajectory::from_json(const nlohmann::json& j) {
  ParameterTrajectory traj;
  traj.object_ids = j.at("object_ids").get<std::vector<std::string>>();
  for (const auto& s : j.at("samples"))
    traj.samples.push_back({s.at("t").get<double>(), params_from_json(s.at("params")),
                            bindings_from_json(s.value("derived", nlohmann::json::object()))});
  return traj;
}

std::string ParameterTrajectory::digest() const { return json_digest(to_json()); }

namespace {

struct CompiledUpdate {
  const UpdateRule* rule;
  formula::Expr expr;
  Dimension dimension;
};

}  // namespace

ParameterTrajectory simulate_trajectory(const std::vector<formula::Formula>& formulas,
                                        const DynamicsSpec& spec) {
  if (!(spec.step > 0.0)) throw PreconditionError("simulate_trajectory: step must be > 0");
  if (!(spec.horizon >= spec.step)) throw PreconditionError("simulate_trajectory: horizon must be >= step");
  if (spec.updates.empty())
    throw PreconditionError("simulate_trajectory: at least one parameter must be time-dependent");
  for (const auto& obj : spec.object_ids)
    if (!spec.initial.count(obj)) throw PreconditionError("no initial parameters for object '" + obj + "'");

  const Dimension time = Dimension::base(formula::BaseDimension::kTime);
  std::vector<CompiledUpdate> updates;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& rule : spec.updates) {
    auto obj = spec.initial.find(rule.object);
    if (obj == spec.initial.end())
      throw PreconditionError("update rule for unknown object '" + rule.object + "'");
    auto sym = obj->second.find(rule.symbol);
    if (sym == obj->second.end())
      throw PreconditionError("update rule for unknown symbol '" + rule.object + "." + rule.symbol + "'");
    if (!seen.insert({rule.object, rule.symbol}).second)
      throw PreconditionError("two update rules for '" + rule.object + "." + rule.symbol + "'");
    formula::SymbolDimensions dims;
    for (const auto& [s, q] : spec.constants) dims[s] = q.dimension;
    for (const auto& [s, q] : obj->second) dims[s] = q.dimension;
    dims["t"] = time;
    formula::Expr e = formula::parse_expression(rule.expr, dims);
    const Dimension want =
        rule.mode == UpdateMode::kRate ? sym->second.dimension / time : sym->second.dimension;
    const Dimension got = formula::infer_dimension(e, dims);
    if (!(got == want))
      throw DimensionError("update '" + rule.object + "." + rule.symbol + "' has dimension [" +
                           got.to_unit_string() + "], expected [" + want.to_unit_string() + "]");
    updates.push_back({&rule, std::move(e), sym->second.dimension});
  }

  std::map<std::string, std::string, std::less<>> derived_keys;
  for (const auto& f : formulas)
    if (!derived_keys.emplace(f.target.symbol, f.id).second)
      throw PreconditionError("formulas '" + derived_keys[f.target.symbol] + "' and '" + f.id +
                              "' share target '" + f.target.symbol + "'");

  const auto count = static_cast<std::size_t>(std::floor(spec.horizon / spec.step + 1e-9)) + 1;
  ParameterTrajectory traj;
  traj.object_ids = spec.object_ids;
  traj.samples.reserve(count);

  auto lookup = [&](const formula::Bindings& own, double t) {
    return [&own, &spec, t](const std::string& s) -> double {
      if (s == "t") return t;
      if (auto it = own.find(s); it != own.end()) return it->second.value;
      return spec.constants.at(s).value;
    };
  };

  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * spec.step;
    TrajectorySample sample;
    sample.time = t;
    if (i == 0) {
      for (const auto& obj : spec.object_ids) sample.params[obj] = spec.initial.at(obj);
    } else {
      const TrajectorySample& prev = traj.samples.back();
      sample.params = prev.params;
      for (const auto& u : updates) {
        double v;
        try {
          if (u.rule->mode == UpdateMode::kClosedForm) {
            v = formula::evaluate_expr(u.expr, lookup(spec.initial.at(u.rule->object), t));
          } else {
            const double rate = formula::evaluate_expr(u.expr, lookup(prev.params.at(u.rule->object), prev.time));
            v = prev.params.at(u.rule->object).at(u.rule->symbol).value + spec.step * rate;
          }
        } catch (const NonFiniteResultError& e) {
          throw UnstableIntegrationError("sample " + std::to_string(i) + ": '" + u.rule->object + "." +
                                         u.rule->symbol + "' diverged: " + e.what());
        } catch (const MathDomainError& e) {
          throw EvaluationError("sample " + std::to_string(i) + ": '" + u.rule->object + "." +
                                u.rule->symbol + "': " + e.what());
        }
        if (!std::isfinite(v))
          throw UnstableIntegrationError("sample " + std::to_string(i) + ": '" + u.rule->object + "." +
                                         u.rule->symbol + "' became non-finite");
        Quantity& q = sample.params.at(u.rule->object).at(u.rule->symbol);
        q.value = v;
      }
    }
    for (const auto& f : formulas) {
      formula::Bindings bound;
      for (const auto& sym : f.free_variables()) {
        bool found = false;
        for (const auto& obj : spec.object_ids) {
          const auto& b = sample.params.at(obj);
          if (auto it = b.find(sym); it != b.end()) {
            bound.emplace(sym, it->second);
            found = true;
            break;
          }
        }
        if (!found)
          if (auto it = spec.constants.find(sym); it != spec.constants.end()) bound.emplace(sym, it->second);
      }
      try {
        sample.derived.insert_or_assign(f.target.symbol, f.evaluate(bound));
      } catch (const NonFiniteResultError& e) {
        throw UnstableIntegrationError("sample " + std::to_string(i) + ": formula '" + f.id + "': " + e.what());
      } catch (const Error& e) {
        throw EvaluationError("sample " + std::to_string(i) + ": formula '" + f.id + "': " + e.what());
      }
    }
    traj.samples.push_back(std::move(sample));
  }
  return traj;
}

}  // namespace cce::event
