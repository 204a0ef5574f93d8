#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cce {

/// Base of every error the engine raises. `code()` is a stable
/// machine-readable identifier that ends up in manifests and on the wire.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define CCE_DEFINE_ERROR(Name, code_str)                 \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& message)            \
        : Error(code_str, message) {}                    \
  };

// Caller bugs: a documented precondition did not hold.
CCE_DEFINE_ERROR(PreconditionError, "precondition")

// formula-kb
CCE_DEFINE_ERROR(DimensionError, "dimension")
CCE_DEFINE_ERROR(UnknownSymbolError, "unknown_symbol")
CCE_DEFINE_ERROR(InvalidFormulaError, "invalid_formula")
CCE_DEFINE_ERROR(MissingBindingError, "missing_binding")
CCE_DEFINE_ERROR(MathDomainError, "math_domain")
CCE_DEFINE_ERROR(UnknownUnitError, "unknown_unit")
CCE_DEFINE_ERROR(EmptyKnowledgeBaseError, "empty_kb")
CCE_DEFINE_ERROR(KnowledgeBaseError, "kb_invalid")
CCE_DEFINE_ERROR(FallbackExhaustedError, "fallback_exhausted")

// backends
CCE_DEFINE_ERROR(BackendError, "backend")
CCE_DEFINE_ERROR(SchemaError, "schema")
CCE_DEFINE_ERROR(DimensionMismatchError, "dimension_mismatch")
CCE_DEFINE_ERROR(ImageShapeError, "image_shape")

// event-chain
CCE_DEFINE_ERROR(EvaluationError, "evaluation")
CCE_DEFINE_ERROR(UnstableIntegrationError, "unstable_integration")
CCE_DEFINE_ERROR(DegenerateTrajectoryError, "degenerate_trajectory")

// scene-graph
CCE_DEFINE_ERROR(GraphSchemaError, "graph_schema")
CCE_DEFINE_ERROR(RuleConflictError, "rule_conflict")
CCE_DEFINE_ERROR(StaleDeltaError, "stale_delta")

// narrative
CCE_DEFINE_ERROR(ValidationError, "validation")
CCE_DEFINE_ERROR(BudgetError, "budget")

// keyframe-plan
CCE_DEFINE_ERROR(UnknownNodeError, "unknown_node")
CCE_DEFINE_ERROR(LengthMismatchError, "length_mismatch")
CCE_DEFINE_ERROR(TargetLengthInfeasibleError, "target_length_infeasible")

// pipeline
CCE_DEFINE_ERROR(ConfigError, "config")
CCE_DEFINE_ERROR(ManifestError, "manifest")

#undef CCE_DEFINE_ERROR

/// An expression evaluated to infinity or NaN.
class NonFiniteResultError : public MathDomainError {
 public:
  using MathDomainError::MathDomainError;
};

/// Malformed formula or rule source. Carries the byte offset of the
/// offending token and the tokens that would have been accepted there.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected,
              const std::string& message)
      : Error("syntax", message),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept {
    return expected_;
  }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Wraps a failure raised while running one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string inner_code,
             const std::string& message)
      : Error("stage_failed", "[" + stage + "] " + message),
        stage_(std::move(stage)),
        inner_code_(std::move(inner_code)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& inner_code() const noexcept { return inner_code_; }

 private:
  std::string stage_;
  std::string inner_code_;
};

}  // namespace cce
