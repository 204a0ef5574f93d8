#pragma once

#include <string>
#include <string_view>

#include "cce/formula/dimension.hpp"

namespace cce::formula {

/// A parsed unit expression. `si = value * scale + offset`.
struct Unit {
  double scale = 1.0;
  double offset = 0.0;
  Dimension dimension;
  std::string label;
};

/// Parses unit expressions such as "kg/m^3", "m*s^-2", "N", "degC",
/// "m^(1/2)" or "1". Offsets (degC) are honored only for a bare unit; inside
/// a compound expression a temperature unit is treated as an interval.
Unit parse_unit(std::string_view text);

/// Convenience: value in `unit` to SI.
double to_si(double value, const Unit& unit);
double from_si(double value_si, const Unit& unit);

}  // namespace cce::formula
