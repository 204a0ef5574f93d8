#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/formula/formula.hpp"

namespace cce::event {

/// Object id -> symbol -> value.
using ObjectParams = std::map<std::string, formula::Bindings, std::less<>>;

/// Pseudo-object under which formula outputs appear in feature keys.
inline constexpr const char* kDerivedObject = "@derived";

struct TrajectorySample {
  double time = 0.0;
  ObjectParams params;
  formula::Bindings derived;

  bool operator==(const TrajectorySample&) const = default;
};

struct ParameterTrajectory {
  std::vector<std::string> object_ids;
  std::vector<TrajectorySample> samples;

  /// Throws PreconditionError unless times strictly increase and every
  /// sample carries the same objects, symbols and dimensions.
  void validate() const;
  nlohmann::json to_json() const;
  static ParameterTrajectory from_json(const nlohmann::json& j);
  std::string digest() const;

  bool operator==(const ParameterTrajectory&) const = default;
};

enum class UpdateMode { kClosedForm, kRate };

/// Time dependence of one parameter. A closed-form expression is evaluated
/// with the object's symbols at their initial values and `t` at the sample
/// time; a rate expression gives d(symbol)/dt from the previous sample and
/// is integrated by forward Euler.
struct UpdateRule {
  std::string object;
  std::string symbol;
  UpdateMode mode = UpdateMode::kClosedForm;
  std::string expr;
};

struct DynamicsSpec {
  std::vector<std::string> object_ids;
  ObjectParams initial;
  /// Time-invariant bindings visible to every expression and formula.
  formula::Bindings constants;
  std::vector<UpdateRule> updates;
  double horizon = 1.0;
  double step = 0.1;
};

/// Samples t = 0, step, 2*step, ... up to horizon. Derived quantities are
/// the targets of `formulas` evaluated on each sample; a formula variable is
/// bound from the first object (in id order) that carries the symbol, then
/// from the constants, then from its declared default.
ParameterTrajectory simulate_trajectory(const std::vector<formula::Formula>& formulas,
                                        const DynamicsSpec& spec);

}  // namespace cce::event
