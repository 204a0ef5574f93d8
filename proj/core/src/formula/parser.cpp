#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>

#include "cce/error.hpp"
#include "cce/formula/formula.hpp"
#include "cce/formula/units.hpp"

namespace cce::formula {
namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Formula formula() {
    Formula f;
    skip_ws();
    f.id = f.name = expect_ident("formula name");
    skip_ws();
    if (peek() == '[') {
      f.aliases = bracket_list();
      skip_ws();
      if (peek() == '[') f.law_tags = bracket_list();
    }
    expect(':');
    const std::size_t target_pos = (skip_ws(), pos_);
    const std::string target = expect_ident("target symbol");
    expect('=');
    f.expr = expression();
    std::vector<VariableDecl> decls;
    skip_ws();
    if (peek() == ';') {
      ++pos_;
      decls = declarations();
    }
    skip_ws();
    if (!at_end()) fail({"';'", "operator", "end of input"}, "unexpected input");

    SymbolDimensions dims;
    bool target_found = false;
    for (auto& d : decls) {
      if (d.symbol == target) {
        f.target = d;
        target_found = true;
      } else {
        dims[d.symbol] = d.dimension;
        f.variables.push_back(d);
      }
    }
    if (!target_found)
      throw UnknownSymbolError("target '" + target + "' (at " +
                               std::to_string(target_pos) + ") has no declaration");
    std::set<std::string> used;
    collect_symbols(f.expr, used);
    if (used.count(target))
      throw InvalidFormulaError("target '" + target + "' appears free in its own expression");
    const Dimension got = infer_dimension(f.expr, dims);
    if (!(got == f.target.dimension))
      throw DimensionError("'" + target + " = " + to_dsl(f.expr) + "': expression is [" +
                           got.to_unit_string() + "], target declared [" +
                           f.target.dimension.to_unit_string() + "]");
    return f;
  }

  Expr bare_expression() {
    Expr e = expression();
    skip_ws();
    if (!at_end()) fail({"operator", "end of input"}, "unexpected input");
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& why) {
    std::string msg = why + " at offset " + std::to_string(pos_) + "; expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += " or ";
      msg += expected[i];
    }
    throw SyntaxError(pos_, std::move(expected), msg);
  }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }
  char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail({std::string("'") + c + "'"}, "unexpected token");
    ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  std::string expect_ident(const char* what) {
    skip_ws();
    if (!is_ident_start(peek())) fail({what}, "expected identifier");
    const std::size_t start = pos_;
    while (is_ident_char(peek())) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  std::vector<std::string> bracket_list() {
    ++pos_;  // '['
    const std::size_t start = pos_;
    while (!at_end() && peek() != ']') {
      if (peek() == '[') fail({"']'"}, "nested '['");
      ++pos_;
    }
    if (at_end()) fail({"']'"}, "unterminated list");
    const std::string_view body = src_.substr(start, pos_ - start);
    ++pos_;
    std::vector<std::string> items;
    std::size_t b = 0;
    while (b <= body.size()) {
      std::size_t e = body.find(',', b);
      if (e == std::string_view::npos) e = body.size();
      std::string item = trim(body.substr(b, e - b));
      if (!item.empty()) items.push_back(std::move(item));
      b = e + 1;
    }
    return items;
  }

  double number_literal() {
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek2())) ||
         ((peek2() == '-' || peek2() == '+') && pos_ + 2 < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_ + 2]))))) {
      pos_ += 2;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (start == pos_) fail({"number"}, "expected number");
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc()) {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    return v;
  }

  std::string raw_unit(const char* terminators) {
    const std::size_t start = pos_;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) &&
           std::string_view(terminators).find(peek()) == std::string_view::npos)
      ++pos_;
    if (start == pos_) fail({"unit"}, "expected unit");
    return std::string(src_.substr(start, pos_ - start));
  }

  Unit unit_at(std::string_view text, std::size_t at) {
    try {
      return parse_unit(text);
    } catch (const SyntaxError& e) {
      throw SyntaxError(at + e.position(), e.expected(), e.what());
    }
  }

  std::vector<VariableDecl> declarations() {
    std::vector<VariableDecl> out;
    std::set<std::string> seen;
    for (;;) {
      skip_ws();
      if (at_end()) break;
      VariableDecl d;
      d.symbol = expect_ident("variable symbol");
      if (!seen.insert(d.symbol).second)
        throw InvalidFormulaError("variable '" + d.symbol + "' declared twice");
      expect(':');
      skip_ws();
      const std::size_t unit_pos = pos_;
      d.unit = raw_unit("=\"");
      const Unit u = unit_at(d.unit, unit_pos);
      d.dimension = u.dimension;
      skip_ws();
      if (peek() == '=') {
        ++pos_;
        skip_ws();
        bool negative = false;
        if (peek() == '-') {
          negative = true;
          ++pos_;
        }
        double v = number_literal();
        if (negative) v = -v;
        d.default_value = Quantity{to_si(v, u), u.dimension, u.dimension.to_unit_string()};
      }
      skip_ws();
      if (peek() == '"') {
        ++pos_;
        const std::size_t start = pos_;
        while (!at_end() && peek() != '"') ++pos_;
        if (at_end()) fail({"'\"'"}, "unterminated description");
        d.description = std::string(src_.substr(start, pos_ - start));
        ++pos_;
      }
      out.push_back(std::move(d));
    }
    return out;
  }

  Expr expression() {
    Expr acc = product();
    for (;;) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        const BinaryOp op = src_[pos_++] == '+' ? BinaryOp::kAdd : BinaryOp::kSub;
        acc = make_binary(op, acc, product());
      } else {
        return acc;
      }
    }
  }

  Expr product() {
    Expr acc = unary();
    for (;;) {
      skip_ws();
      if (peek() == '*' || peek() == '/') {
        const BinaryOp op = src_[pos_++] == '*' ? BinaryOp::kMul : BinaryOp::kDiv;
        acc = make_binary(op, acc, unary());
      } else {
        return acc;
      }
    }
  }

  Expr unary() {
    skip_ws();
    if (peek() == '-') {
      ++pos_;
      return make_unary(UnaryFn::kNeg, unary());
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip_ws();
    if (peek() != '^') return base;
    ++pos_;
    skip_ws();
    return make_power(base, exponent());
  }

  std::int64_t integer() {
    bool negative = false;
    skip_ws();
    if (peek() == '-') {
      negative = true;
      ++pos_;
    }
    skip_ws();
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail({"integer"}, "expected integer exponent");
    std::int64_t v = 0;
    std::from_chars(src_.data() + start, src_.data() + pos_, v);
    return negative ? -v : v;
  }

  Rational exponent() {
    if (accept('(')) {
      const std::int64_t num = integer();
      std::int64_t den = 1;
      if (accept('/')) {
        den = integer();
        if (den == 0) fail({"nonzero integer"}, "zero exponent denominator");
      }
      expect(')');
      return Rational(num, den);
    }
    return Rational(integer());
  }

  Expr primary() {
    skip_ws();
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const double v = number_literal();
      if (peek() == '[') {
        ++pos_;
        const std::size_t unit_pos = pos_;
        const std::string text = raw_unit("]");
        if (peek() != ']') fail({"']'"}, "unterminated unit");
        ++pos_;
        const Unit u = unit_at(text, unit_pos);
        return make_constant(Quantity{to_si(v, u), u.dimension, u.dimension.to_unit_string()});
      }
      return make_constant(Quantity::dimensionless(v));
    }
    if (c == '(') {
      ++pos_;
      Expr inner = expression();
      expect(')');
      return inner;
    }
    if (is_ident_start(c)) {
      const std::string name = expect_ident("identifier");
      skip_ws();
      if (peek() != '(') return make_variable(name);
      ++pos_;
      static const std::map<std::string, UnaryFn, std::less<>> kUnary = {
          {"sqrt", UnaryFn::kSqrt}, {"exp", UnaryFn::kExp},   {"ln", UnaryFn::kLn},
          {"abs", UnaryFn::kAbs},   {"sin", UnaryFn::kSin},   {"cos", UnaryFn::kCos},
          {"tan", UnaryFn::kTan},   {"asin", UnaryFn::kAsin}, {"acos", UnaryFn::kAcos},
          {"atan", UnaryFn::kAtan}};
      if (auto fn = kUnary.find(name); fn != kUnary.end()) {
        Expr arg = expression();
        expect(')');
        return make_unary(fn->second, arg);
      }
      if (name == "min" || name == "max") {
        Expr a = expression();
        expect(',');
        Expr b = expression();
        expect(')');
        return make_binary(name == "min" ? BinaryOp::kMin : BinaryOp::kMax, a, b);
      }
      if (name == "if") {
        Expr lhs = expression();
        skip_ws();
        Comparison cmp;
        if (peek() == '<') {
          ++pos_;
          cmp = (peek() == '=') ? (++pos_, Comparison::kLe) : Comparison::kLt;
        } else if (peek() == '>') {
          ++pos_;
          cmp = (peek() == '=') ? (++pos_, Comparison::kGe) : Comparison::kGt;
        } else {
          fail({"'<'", "'<='", "'>'", "'>='"}, "expected comparison");
        }
        Expr rhs = expression();
        expect(',');
        Expr then_branch = expression();
        expect(',');
        Expr else_branch = expression();
        expect(')');
        return make_piecewise(cmp, lhs, rhs, then_branch, else_branch);
      }
      throw UnknownSymbolError("unknown function '" + name + "'");
    }
    fail({"number", "identifier", "'('", "'-'"}, "expected operand");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string decl_text(const VariableDecl& d) {
  std::string s = d.symbol + ":" + d.dimension.to_unit_string();
  if (d.default_value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d.default_value->value);
    s += "=";
    s += buf;
  }
  if (!d.description.empty()) s += " \"" + d.description + "\"";
  return s;
}

}  // namespace

Formula parse_formula(std::string_view source) { return Parser(source).formula(); }

Expr parse_expression(std::string_view source, const SymbolDimensions& symbols) {
  Expr e = Parser(source).bare_expression();
  infer_dimension(e, symbols);
  return e;
}

std::set<std::string> Formula::free_variables() const {
  std::set<std::string> out;
  collect_symbols(expr, out);
  return out;
}

const VariableDecl* Formula::find_variable(std::string_view symbol) const {
  for (const auto& v : variables)
    if (v.symbol == symbol) return &v;
  return nullptr;
}

Quantity Formula::evaluate(const Bindings& bindings) const {
  std::map<std::string, double, std::less<>> values;
  for (const auto& symbol : free_variables()) {
    const VariableDecl* decl = find_variable(symbol);
    auto it = bindings.find(symbol);
    if (it != bindings.end()) {
      if (!(it->second.dimension == decl->dimension))
        throw DimensionError("binding '" + symbol + "' is [" +
                             it->second.dimension.to_unit_string() + "], '" + id +
                             "' declares [" + decl->dimension.to_unit_string() + "]");
      values[symbol] = it->second.value;
    } else if (decl->default_value) {
      values[symbol] = decl->default_value->value;
    } else {
      throw MissingBindingError("'" + id + "' needs a binding for '" + symbol + "'");
    }
  }
  const double v = evaluate_expr(expr, [&](const std::string& s) { return values.at(s); });
  return Quantity{v, target.dimension, target.dimension.to_unit_string()};
}

std::string to_dsl(const Formula& f) {
  auto list = [](const std::vector<std::string>& items) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ", ";
      s += items[i];
    }
    return s + "]";
  };
  std::string out = f.id;
  if (!f.aliases.empty() || !f.law_tags.empty()) out += " " + list(f.aliases);
  if (!f.law_tags.empty()) out += " " + list(f.law_tags);
  out += " : " + f.target.symbol + " = " + to_dsl(f.expr) + " ;";
  for (const auto& v : f.variables) out += " " + decl_text(v);
  out += " " + decl_text(f.target);
  return out;
}

}  // namespace cce::formula
