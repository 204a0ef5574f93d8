#include "cce/formula/quantity.hpp"

#include <cstdio>

#include "cce/error.hpp"
#include "cce/formula/units.hpp"

namespace cce::formula {

Quantity Quantity::from(double v, std::string_view unit) {
  const Unit u = parse_unit(unit);
  return {to_si(v, u), u.dimension, u.dimension.to_unit_string()};
}

double Quantity::in(std::string_view unit) const {
  const Unit u = parse_unit(unit);
  if (!(u.dimension == dimension))
    throw DimensionError("cannot express [" + dimension.to_unit_string() +
                         "] in '" + std::string(unit) + "'");
  return from_si(value, u);
}

static void require_same(const Quantity& a, const Quantity& b, const char* op) {
  if (!(a.dimension == b.dimension))
    throw DimensionError(std::string("'") + op + "' between [" +
                         a.dimension.to_unit_string() + "] and [" +
                         b.dimension.to_unit_string() + "]");
}

Quantity operator+(const Quantity& a, const Quantity& b) {
  require_same(a, b, "+");
  return {a.value + b.value, a.dimension, a.unit_label};
}

Quantity operator-(const Quantity& a, const Quantity& b) {
  require_same(a, b, "-");
  return {a.value - b.value, a.dimension, a.unit_label};
}

Quantity operator*(const Quantity& a, const Quantity& b) {
  const Dimension d = a.dimension * b.dimension;
  return {a.value * b.value, d, d.to_unit_string()};
}

Quantity operator/(const Quantity& a, const Quantity& b) {
  const Dimension d = a.dimension / b.dimension;
  return {a.value / b.value, d, d.to_unit_string()};
}

std::string to_string(const Quantity& q) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", q.value);
  return std::string(buf) + " " + q.dimension.to_unit_string();
}

nlohmann::json to_json(const Quantity& q) {
  return {{"value", q.value}, {"unit", q.dimension.to_unit_string()}};
}

Quantity quantity_from_json(const nlohmann::json& j, const Dimension& expected) {
  if (j.is_number()) {
    return {j.get<double>(), expected, expected.to_unit_string()};
  }
  Quantity q = quantity_from_json(j);
  if (!(q.dimension == expected))
    throw DimensionError("expected [" + expected.to_unit_string() + "], got [" +
                         q.dimension.to_unit_string() + "]");
  return q;
}

Quantity quantity_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("value") || !j.at("value").is_number())
    throw SchemaError("quantity must be {value, unit}: " + j.dump());
  const std::string unit =
      j.contains("unit") ? j.at("unit").get<std::string>() : std::string("1");
  return Quantity::from(j.at("value").get<double>(), unit);
}

}  // namespace cce::formula
