#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"
#include "cce/error.hpp"
#include "cce/event/boundaries.hpp"

namespace cce::event {

enum class Monotone { kIncreasing, kDecreasing, kFree };

std::string to_string(Monotone m);
Monotone monotone_from_string(std::string_view s);

/// Symbol -> declared direction; applies to every object carrying it.
using MonotoneDecls = std::map<std::string, Monotone, std::less<>>;

struct Violation {
  int t_index = 0;
  std::string symbol;
  std::string object_id;
  double observed_jump = 0.0;
  double allowed_bound = 0.0;
  /// "reversal" or "jump".
  std::string kind;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  int retry_count = 0;

  bool accepted() const { return violations.empty(); }
  nlohmann::json to_json() const;
};

/// Reversal: a declared-monotone value moves against its direction between
/// consecutive conditions (bound 0). Jump: with at least three conditions,
/// a range-normalized step exceeds kappa times the median step of that
/// feature (bound kappa * median; skipped when the median is 0).
ValidationReport validate_continuity(const std::vector<PhysicalCondition>& chain,
                                     const MonotoneDecls& decls, double kappa = 5.0);

class ReInferenceExhaustedError : public Error {
 public:
  ReInferenceExhaustedError(ValidationReport report, const std::string& message)
      : Error("reinference_exhausted", message), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

struct ReinferOptions {
  int max_retries = 3;
  double kappa = 5.0;
  /// Forwarded to the backend as context.
  std::string description;
};

/// Re-requests each violating value from the backend with its neighbours as
/// context, re-validates, and repeats until the chain is accepted. A reply in
/// the wrong dimension consumes a retry. `final_report` receives the
/// accepted report including the retry count.
std::vector<PhysicalCondition> reinfer_on_violation(const ValidationReport& report,
                                                    std::vector<PhysicalCondition> chain,
                                                    const MonotoneDecls& decls,
                                                    backends::ReasoningBackend& reasoner,
                                                    const ReinferOptions& options = {},
                                                    ValidationReport* final_report = nullptr);

}  // namespace cce::event
