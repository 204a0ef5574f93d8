#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>

#include "cce/formula/dimension.hpp"
#include "cce/formula/quantity.hpp"

namespace cce::formula {

struct ExprNode;

/// Immutable expression handle. Copies share structure; equality is
/// structural.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  const ExprNode& node() const { return *node_; }
  bool empty() const { return node_ == nullptr; }

  bool operator==(const Expr& o) const;

 private:
  std::shared_ptr<const ExprNode> node_;
};

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kMin, kMax };
enum class UnaryFn { kNeg, kSqrt, kExp, kLn, kAbs, kSin, kCos, kTan, kAsin, kAcos, kAtan };
enum class Comparison { kLt, kLe, kGt, kGe };

struct VariableRef {
  std::string symbol;
  bool operator==(const VariableRef&) const = default;
};

struct ConstantValue {
  Quantity value;
  bool operator==(const ConstantValue&) const = default;
};

struct BinaryExpr {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
  bool operator==(const BinaryExpr&) const = default;
};

struct UnaryExpr {
  UnaryFn fn;
  Expr arg;
  bool operator==(const UnaryExpr&) const = default;
};

struct PowerExpr {
  Expr base;
  Rational exponent;
  bool operator==(const PowerExpr&) const = default;
};

/// if(cond_lhs <cmp> cond_rhs, then, otherwise)
struct PiecewiseExpr {
  Comparison cmp;
  Expr cond_lhs;
  Expr cond_rhs;
  Expr then_branch;
  Expr else_branch;
  bool operator==(const PiecewiseExpr&) const = default;
};

struct ExprNode {
  std::variant<VariableRef, ConstantValue, BinaryExpr, UnaryExpr, PowerExpr,
               PiecewiseExpr>
      kind;
};

Expr make_variable(std::string symbol);
Expr make_constant(Quantity value);
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs);
Expr make_unary(UnaryFn fn, Expr arg);
Expr make_power(Expr base, Rational exponent);
Expr make_piecewise(Comparison cmp, Expr lhs, Expr rhs, Expr then_branch,
                    Expr else_branch);

using SymbolDimensions = std::map<std::string, Dimension, std::less<>>;

/// Dimension of `e`. Throws UnknownSymbolError for undeclared symbols and
/// DimensionError naming the offending subexpression.
Dimension infer_dimension(const Expr& e, const SymbolDimensions& symbols);

/// Evaluates on SI magnitudes. Raises MathDomainError instead of producing
/// NaN or infinity.
using SymbolValues = std::function<double(const std::string&)>;
double evaluate_expr(const Expr& e, const SymbolValues& lookup);

void collect_symbols(const Expr& e, std::set<std::string>& out);

/// Fully parenthesized DSL rendering; parses back to an equal tree.
std::string to_dsl(const Expr& e);

}  // namespace cce::formula
