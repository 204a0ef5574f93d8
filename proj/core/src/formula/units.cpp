#include "cce/formula/units.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include "cce/error.hpp"

namespace cce::formula {
namespace {

using BD = BaseDimension;

Dimension dim(int l, int m, int t, int i = 0, int th = 0, int n = 0, int j = 0) {
  return Dimension({Rational(l), Rational(m), Rational(t), Rational(i),
                    Rational(th), Rational(n), Rational(j)});
}

struct Atom {
  double scale;
  double offset;
  Dimension dimension;
};

const std::map<std::string, Atom, std::less<>>& atom_table() {
  static const auto* table = new std::map<std::string, Atom, std::less<>>{
      {"1", {1.0, 0.0, dim(0, 0, 0)}},
      {"m", {1.0, 0.0, dim(1, 0, 0)}},
      {"cm", {1e-2, 0.0, dim(1, 0, 0)}},
      {"mm", {1e-3, 0.0, dim(1, 0, 0)}},
      {"um", {1e-6, 0.0, dim(1, 0, 0)}},
      {"nm", {1e-9, 0.0, dim(1, 0, 0)}},
      {"km", {1e3, 0.0, dim(1, 0, 0)}},
      {"kg", {1.0, 0.0, dim(0, 1, 0)}},
      {"g", {1e-3, 0.0, dim(0, 1, 0)}},
      {"s", {1.0, 0.0, dim(0, 0, 1)}},
      {"ms", {1e-3, 0.0, dim(0, 0, 1)}},
      {"min", {60.0, 0.0, dim(0, 0, 1)}},
      {"h", {3600.0, 0.0, dim(0, 0, 1)}},
      {"A", {1.0, 0.0, dim(0, 0, 0, 1)}},
      {"K", {1.0, 0.0, dim(0, 0, 0, 0, 1)}},
      {"degC", {1.0, 273.15, dim(0, 0, 0, 0, 1)}},
      {"mol", {1.0, 0.0, dim(0, 0, 0, 0, 0, 1)}},
      {"cd", {1.0, 0.0, dim(0, 0, 0, 0, 0, 0, 1)}},
      {"rad", {1.0, 0.0, dim(0, 0, 0)}},
      {"deg", {3.14159265358979323846 / 180.0, 0.0, dim(0, 0, 0)}},
      {"sr", {1.0, 0.0, dim(0, 0, 0)}},
      {"Hz", {1.0, 0.0, dim(0, 0, -1)}},
      {"N", {1.0, 0.0, dim(1, 1, -2)}},
      {"J", {1.0, 0.0, dim(2, 1, -2)}},
      {"kJ", {1e3, 0.0, dim(2, 1, -2)}},
      {"eV", {1.602176634e-19, 0.0, dim(2, 1, -2)}},
      {"W", {1.0, 0.0, dim(2, 1, -3)}},
      {"Pa", {1.0, 0.0, dim(-1, 1, -2)}},
      {"kPa", {1e3, 0.0, dim(-1, 1, -2)}},
      {"atm", {101325.0, 0.0, dim(-1, 1, -2)}},
      {"C", {1.0, 0.0, dim(0, 0, 1, 1)}},
      {"V", {1.0, 0.0, dim(2, 1, -3, -1)}},
      {"Ohm", {1.0, 0.0, dim(2, 1, -3, -2)}},
      {"T", {1.0, 0.0, dim(0, 1, -2, -1)}},
      {"L", {1e-3, 0.0, dim(3, 0, 0)}},
      {"mL", {1e-6, 0.0, dim(3, 0, 0)}},
      {"lm", {1.0, 0.0, dim(0, 0, 0, 0, 0, 0, 1)}},
      {"lx", {1.0, 0.0, dim(-2, 0, 0, 0, 0, 0, 1)}},
  };
  return *table;
}

class UnitParser {
 public:
  explicit UnitParser(std::string_view text) : text_(text) {}

  Unit parse() {
    if (text_.empty()) fail("unit expression", "empty unit");
    Unit u = expression();
    if (pos_ != text_.size()) fail("'*', '/' or end of unit", "trailing input");
    return u;
  }

  std::size_t atoms() const { return atoms_; }

 private:
  [[noreturn]] void fail(const std::string& expected, const std::string& why) {
    throw SyntaxError(pos_, {expected},
                      "unit '" + std::string(text_) + "' at " +
                          std::to_string(pos_) + ": " + why);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  Unit expression() {
    Unit acc = term();
    while (peek() == '*' || peek() == '/') {
      const char op = text_[pos_++];
      Unit rhs = term();
      if (op == '*') {
        acc.scale *= rhs.scale;
        acc.dimension = acc.dimension * rhs.dimension;
      } else {
        acc.scale /= rhs.scale;
        acc.dimension = acc.dimension / rhs.dimension;
      }
      acc.offset = 0.0;
    }
    return acc;
  }

  Unit term() {
    Unit base = atom();
    if (peek() == '^') {
      ++pos_;
      const Rational p = exponent();
      base.scale = std::pow(base.scale, p.to_double());
      base.dimension = base.dimension.pow(p);
      if (p != Rational(1)) base.offset = 0.0;
    }
    return base;
  }

  Rational exponent() {
    if (peek() == '(') {
      ++pos_;
      const std::int64_t num = integer();
      std::int64_t den = 1;
      if (peek() == '/') {
        ++pos_;
        den = integer();
        if (den == 0) fail("nonzero denominator", "zero denominator");
      }
      if (peek() != ')') fail("')'", "unterminated exponent");
      ++pos_;
      return Rational(num, den);
    }
    return Rational(integer());
  }

  std::int64_t integer() {
    bool negative = false;
    if (peek() == '-' || peek() == '+') negative = text_[pos_++] == '-';
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("integer", "expected integer exponent");
    const std::int64_t v = std::stoll(std::string(text_.substr(start, pos_ - start)));
    return negative ? -v : v;
  }

  Unit atom() {
    if (peek() == '(') {
      ++pos_;
      Unit inner = expression();
      if (peek() != ')') fail("')'", "unbalanced parenthesis");
      ++pos_;
      inner.offset = 0.0;
      ++atoms_;
      return inner;
    }
    const std::size_t start = pos_;
    if (peek() == '1') {
      ++pos_;
    } else {
      while (std::isalpha(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (start == pos_) fail("unit name", "expected a unit");
    const std::string_view name = text_.substr(start, pos_ - start);
    const auto& table = atom_table();
    auto it = table.find(name);
    if (it == table.end())
      throw UnknownUnitError("unknown unit '" + std::string(name) + "'");
    ++atoms_;
    Unit u;
    u.scale = it->second.scale;
    u.offset = it->second.offset;
    u.dimension = it->second.dimension;
    return u;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t atoms_ = 0;
};

}  // namespace

Unit parse_unit(std::string_view text) {
  UnitParser parser(text);
  Unit u = parser.parse();
  if (parser.atoms() != 1) u.offset = 0.0;
  u.label = std::string(text);
  return u;
}

double to_si(double value, const Unit& unit) {
  return value * unit.scale + unit.offset;
}

double from_si(double value_si, const Unit& unit) {
  return (value_si - unit.offset) / unit.scale;
}

}  // namespace cce::formula
