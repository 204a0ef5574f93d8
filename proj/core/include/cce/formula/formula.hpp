#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cce/formula/expr.hpp"
#include "cce/formula/quantity.hpp"

namespace cce::formula {

struct VariableDecl {
  std::string symbol;
  Dimension dimension;
  /// Unit as written in the source; display only.
  std::string unit;
  std::string description;
  std::optional<Quantity> default_value;

  bool operator==(const VariableDecl& o) const {
    return symbol == o.symbol && dimension == o.dimension &&
           description == o.description && default_value == o.default_value;
  }
};

using Bindings = std::map<std::string, Quantity, std::less<>>;

/// A named, law-tagged equation `target = expr` with declared variables.
struct Formula {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::vector<std::string> law_tags;
  /// Free-text description from the knowledge base; not part of the DSL.
  std::string description;
  VariableDecl target;
  Expr expr;
  /// Declared inputs, excluding the target.
  std::vector<VariableDecl> variables;

  /// Symbols that actually occur in `expr`.
  std::set<std::string> free_variables() const;
  const VariableDecl* find_variable(std::string_view symbol) const;

  /// Evaluates the target. Unbound free variables fall back to declared
  /// defaults; anything else missing raises MissingBindingError.
  Quantity evaluate(const Bindings& bindings) const;

  bool operator==(const Formula&) const = default;
};

/// Parses `name [aliases] [laws] : target = expr ; decls`. See
/// docs/formula_dsl.ebnf for the full grammar.
Formula parse_formula(std::string_view source);

/// Parses a bare expression (the `expr` production) and checks it against
/// `symbols`. Used by trajectory update rules.
Expr parse_expression(std::string_view source, const SymbolDimensions& symbols);

/// Canonical source form; parse_formula(to_dsl(f)) == f for parsed formulas.
std::string to_dsl(const Formula& f);

}  // namespace cce::formula
