#include "cce/formula/expr.hpp"

#include <cmath>
#include <cstdio>

#include "cce/error.hpp"

namespace cce::formula {

bool Expr::operator==(const Expr& o) const {
  if (node_ == o.node_) return true;
  if (!node_ || !o.node_) return false;
  return node_->kind == o.node_->kind;
}

Expr make_variable(std::string symbol) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{VariableRef{std::move(symbol)}}));
}
Expr make_constant(Quantity value) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{ConstantValue{std::move(value)}}));
}
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{BinaryExpr{op, std::move(lhs), std::move(rhs)}}));
}
Expr make_unary(UnaryFn fn, Expr arg) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{UnaryExpr{fn, std::move(arg)}}));
}
Expr make_power(Expr base, Rational exponent) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{PowerExpr{std::move(base), exponent}}));
}
Expr make_piecewise(Comparison cmp, Expr lhs, Expr rhs, Expr then_branch,
                    Expr else_branch) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{PiecewiseExpr{cmp, std::move(lhs), std::move(rhs),
                             std::move(then_branch), std::move(else_branch)}}));
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const char* op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
    case BinaryOp::kMin: return "min";
    case BinaryOp::kMax: return "max";
  }
  return "?";
}

const char* fn_text(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::kNeg: return "-";
    case UnaryFn::kSqrt: return "sqrt";
    case UnaryFn::kExp: return "exp";
    case UnaryFn::kLn: return "ln";
    case UnaryFn::kAbs: return "abs";
    case UnaryFn::kSin: return "sin";
    case UnaryFn::kCos: return "cos";
    case UnaryFn::kTan: return "tan";
    case UnaryFn::kAsin: return "asin";
    case UnaryFn::kAcos: return "acos";
    case UnaryFn::kAtan: return "atan";
  }
  return "?";
}

const char* cmp_text(Comparison c) {
  switch (c) {
    case Comparison::kLt: return "<";
    case Comparison::kLe: return "<=";
    case Comparison::kGt: return ">";
    case Comparison::kGe: return ">=";
  }
  return "?";
}

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep integral literals readable ("9.8" stays "9.8000000000000007" but
  // "2" must not print as "2.0000000000000000").
  return s;
}

[[noreturn]] void mismatch(const Expr& e, const Dimension& a, const Dimension& b) {
  throw DimensionError("in '" + to_dsl(e) + "': [" + a.to_unit_string() +
                       "] vs [" + b.to_unit_string() + "]");
}

}  // namespace

Dimension infer_dimension(const Expr& e, const SymbolDimensions& symbols) {
  return std::visit(
      Overloaded{
          [&](const VariableRef& v) -> Dimension {
            auto it = symbols.find(v.symbol);
            if (it == symbols.end())
              throw UnknownSymbolError("undeclared symbol '" + v.symbol + "'");
            return it->second;
          },
          [&](const ConstantValue& c) -> Dimension { return c.value.dimension; },
          [&](const BinaryExpr& b) -> Dimension {
            const Dimension l = infer_dimension(b.lhs, symbols);
            const Dimension r = infer_dimension(b.rhs, symbols);
            switch (b.op) {
              case BinaryOp::kMul: return l * r;
              case BinaryOp::kDiv: return l / r;
              default:
                if (!(l == r)) mismatch(e, l, r);
                return l;
            }
          },
          [&](const UnaryExpr& u) -> Dimension {
            const Dimension a = infer_dimension(u.arg, symbols);
            switch (u.fn) {
              case UnaryFn::kSqrt: return a.pow(Rational(1, 2));
              case UnaryFn::kNeg:
              case UnaryFn::kAbs: return a;
              default:
                if (!a.dimensionless()) mismatch(e, a, Dimension::none());
                return a;
            }
          },
          [&](const PowerExpr& p) -> Dimension {
            return infer_dimension(p.base, symbols).pow(p.exponent);
          },
          [&](const PiecewiseExpr& p) -> Dimension {
            const Dimension cl = infer_dimension(p.cond_lhs, symbols);
            const Dimension cr = infer_dimension(p.cond_rhs, symbols);
            if (!(cl == cr)) mismatch(e, cl, cr);
            const Dimension t = infer_dimension(p.then_branch, symbols);
            const Dimension f = infer_dimension(p.else_branch, symbols);
            if (!(t == f)) mismatch(e, t, f);
            return t;
          },
      },
      e.node().kind);
}

double evaluate_expr(const Expr& e, const SymbolValues& lookup) {
  const double result = std::visit(
      Overloaded{
          [&](const VariableRef& v) -> double { return lookup(v.symbol); },
          [&](const ConstantValue& c) -> double { return c.value.value; },
          [&](const BinaryExpr& b) -> double {
            const double l = evaluate_expr(b.lhs, lookup);
            const double r = evaluate_expr(b.rhs, lookup);
            switch (b.op) {
              case BinaryOp::kAdd: return l + r;
              case BinaryOp::kSub: return l - r;
              case BinaryOp::kMul: return l * r;
              case BinaryOp::kDiv:
                if (r == 0.0)
                  throw MathDomainError("division by zero in '" + to_dsl(e) + "'");
                return l / r;
              case BinaryOp::kMin: return std::min(l, r);
              case BinaryOp::kMax: return std::max(l, r);
            }
            return 0.0;
          },
          [&](const UnaryExpr& u) -> double {
            const double a = evaluate_expr(u.arg, lookup);
            switch (u.fn) {
              case UnaryFn::kNeg: return -a;
              case UnaryFn::kAbs: return std::fabs(a);
              case UnaryFn::kExp: return std::exp(a);
              case UnaryFn::kSqrt:
                if (a < 0.0)
                  throw MathDomainError("sqrt of negative value in '" + to_dsl(e) + "'");
                return std::sqrt(a);
              case UnaryFn::kLn:
                if (a <= 0.0)
                  throw MathDomainError("ln of non-positive value in '" + to_dsl(e) + "'");
                return std::log(a);
              case UnaryFn::kSin: return std::sin(a);
              case UnaryFn::kCos: return std::cos(a);
              case UnaryFn::kTan: return std::tan(a);
              case UnaryFn::kAtan: return std::atan(a);
              case UnaryFn::kAsin:
              case UnaryFn::kAcos:
                if (a < -1.0 || a > 1.0)
                  throw MathDomainError(std::string(fn_text(u.fn)) + " argument outside [-1, 1] in '" + to_dsl(e) + "'");
                return u.fn == UnaryFn::kAsin ? std::asin(a) : std::acos(a);
            }
            return 0.0;
          },
          [&](const PowerExpr& p) -> double {
            const double base = evaluate_expr(p.base, lookup);
            if (base < 0.0 && !p.exponent.is_integer())
              throw MathDomainError("fractional power of negative value in '" +
                                    to_dsl(e) + "'");
            if (base == 0.0 && p.exponent < Rational(0))
              throw MathDomainError("zero raised to negative power in '" + to_dsl(e) + "'");
            if (p.exponent == Rational(1, 2)) return std::sqrt(base);
            return std::pow(base, p.exponent.to_double());
          },
          [&](const PiecewiseExpr& p) -> double {
            const double l = evaluate_expr(p.cond_lhs, lookup);
            const double r = evaluate_expr(p.cond_rhs, lookup);
            bool holds = false;
            switch (p.cmp) {
              case Comparison::kLt: holds = l < r; break;
              case Comparison::kLe: holds = l <= r; break;
              case Comparison::kGt: holds = l > r; break;
              case Comparison::kGe: holds = l >= r; break;
            }
            return evaluate_expr(holds ? p.then_branch : p.else_branch, lookup);
          },
      },
      e.node().kind);
  if (!std::isfinite(result))
    throw NonFiniteResultError("non-finite result in '" + to_dsl(e) + "'");
  return result;
}

void collect_symbols(const Expr& e, std::set<std::string>& out) {
  std::visit(Overloaded{
                 [&](const VariableRef& v) { out.insert(v.symbol); },
                 [&](const ConstantValue&) {},
                 [&](const BinaryExpr& b) {
                   collect_symbols(b.lhs, out);
                   collect_symbols(b.rhs, out);
                 },
                 [&](const UnaryExpr& u) { collect_symbols(u.arg, out); },
                 [&](const PowerExpr& p) { collect_symbols(p.base, out); },
                 [&](const PiecewiseExpr& p) {
                   collect_symbols(p.cond_lhs, out);
                   collect_symbols(p.cond_rhs, out);
                   collect_symbols(p.then_branch, out);
                   collect_symbols(p.else_branch, out);
                 },
             },
             e.node().kind);
}

std::string to_dsl(const Expr& e) {
  return std::visit(
      Overloaded{
          [&](const VariableRef& v) { return v.symbol; },
          [&](const ConstantValue& c) {
            std::string s = number_text(c.value.value);
            if (!c.value.dimension.dimensionless())
              s += "[" + c.value.dimension.to_unit_string() + "]";
            return c.value.value < 0.0 ? "(" + s + ")" : s;
          },
          [&](const BinaryExpr& b) {
            if (b.op == BinaryOp::kMin || b.op == BinaryOp::kMax)
              return std::string(op_text(b.op)) + "(" + to_dsl(b.lhs) + ", " +
                     to_dsl(b.rhs) + ")";
            return "(" + to_dsl(b.lhs) + " " + op_text(b.op) + " " +
                   to_dsl(b.rhs) + ")";
          },
          [&](const UnaryExpr& u) {
            if (u.fn == UnaryFn::kNeg) return "(-" + to_dsl(u.arg) + ")";
            return std::string(fn_text(u.fn)) + "(" + to_dsl(u.arg) + ")";
          },
          [&](const PowerExpr& p) {
            const std::string exp = p.exponent.is_integer()
                                        ? p.exponent.to_string()
                                        : "(" + p.exponent.to_string() + ")";
            return "(" + to_dsl(p.base) + "^" + exp + ")";
          },
          [&](const PiecewiseExpr& p) {
            return "if(" + to_dsl(p.cond_lhs) + " " + cmp_text(p.cmp) + " " +
                   to_dsl(p.cond_rhs) + ", " + to_dsl(p.then_branch) + ", " +
                   to_dsl(p.else_branch) + ")";
          },
      },
      e.node().kind);
}

}  // namespace cce::formula
