#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cce/formula/dimension.hpp"

namespace cce::formula {

/// A real value in SI base units together with its dimension. `unit_label`
/// is display-only and does not take part in equality.
struct Quantity {
  double value = 0.0;
  Dimension dimension;
  std::string unit_label;

  static Quantity dimensionless(double v) { return {v, Dimension::none(), "1"}; }
  /// Converts `v` given in `unit` (e.g. "degC", "g/cm^3") to SI.
  static Quantity from(double v, std::string_view unit);

  /// Value expressed in `unit`; throws DimensionError if incompatible.
  double in(std::string_view unit) const;

  bool operator==(const Quantity& o) const {
    return value == o.value && dimension == o.dimension;
  }
};

Quantity operator+(const Quantity& a, const Quantity& b);
Quantity operator-(const Quantity& a, const Quantity& b);
Quantity operator*(const Quantity& a, const Quantity& b);
Quantity operator/(const Quantity& a, const Quantity& b);

std::string to_string(const Quantity& q);

/// Wire form: {"value": <SI number>, "unit": "<SI unit string>"}.
nlohmann::json to_json(const Quantity& q);
/// Accepts the wire form (any parseable unit, converted to SI) or a bare
/// number, which is interpreted in `expected`'s SI unit. A unit of the
/// wrong dimension raises DimensionError.
Quantity quantity_from_json(const nlohmann::json& j, const Dimension& expected);
/// Accepts only the wire form; dimension taken from the unit.
Quantity quantity_from_json(const nlohmann::json& j);

}  // namespace cce::formula
