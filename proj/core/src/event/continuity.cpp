#include "cce/event/continuity.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "cce/backends/schema.hpp"

namespace cce::event {

using nlohmann::json;

std::string to_string(Monotone m) {
  switch (m) {
    case Monotone::kIncreasing: return "increasing";
    case Monotone::kDecreasing: return "decreasing";
    case Monotone::kFree: return "free";
  }
  return "";
}

Monotone monotone_from_string(std::string_view s) {
  for (auto m : {Monotone::kIncreasing, Monotone::kDecreasing, Monotone::kFree})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown monotone declaration '" + std::string(s) + "'");
}

json ValidationReport::to_json() const {
  json v = json::array();
  for (const auto& x : violations)
    v.push_back({{"t_index", x.t_index},
                 {"symbol", x.symbol},
                 {"object", x.object_id},
                 {"observed_jump", x.observed_jump},
                 {"allowed_bound", x.allowed_bound},
                 {"kind", x.kind}});
  return {{"violations", v}, {"retry_count", retry_count}};
}

namespace {

std::vector<FeatureKey> features(const PhysicalCondition& c) {
  std::vector<FeatureKey> out;
  for (const auto& [obj, b] : c.params)
    for (const auto& [sym, q] : b) out.emplace_back(obj, sym);
  for (const auto& [sym, q] : c.derived) out.emplace_back(kDerivedObject, sym);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

ValidationReport validate_continuity(const std::vector<PhysicalCondition>& chain, const MonotoneDecls& decls,
                                     double kappa) {
  if (chain.empty()) throw PreconditionError("validate_continuity: empty chain");
  ValidationReport report;
  for (const auto& key : features(chain.front())) {
    std::vector<double> series;
    for (const auto& c : chain) {
      const formula::Quantity* q = c.find(key);
      if (!q) throw PreconditionError("condition " + std::to_string(c.t_index) + " lacks '" + key.first + "." +
                                      key.second + "'");
      series.push_back(q->value);
    }
    if (key.first != kDerivedObject) {
      auto d = decls.find(key.second);
      const Monotone m = d == decls.end() ? Monotone::kFree : d->second;
      for (std::size_t i = 1; i < series.size() && m != Monotone::kFree; ++i) {
        const double step = series[i] - series[i - 1];
        if ((m == Monotone::kIncreasing && step < 0.0) || (m == Monotone::kDecreasing && step > 0.0))
          report.violations.push_back({chain[i].t_index, key.second, key.first, step, 0.0, "reversal"});
      }
    }
    if (series.size() < 3) continue;
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    const double range = *hi - *lo;
    if (range <= 0.0) continue;
    std::vector<double> jumps;
    for (std::size_t i = 1; i < series.size(); ++i) jumps.push_back(std::abs(series[i] - series[i - 1]) / range);
    const double med = median(jumps);
    if (med <= 0.0) continue;
    for (std::size_t i = 0; i < jumps.size(); ++i)
      if (jumps[i] > kappa * med)
        report.violations.push_back({chain[i + 1].t_index, key.second, key.first, jumps[i], kappa * med, "jump"});
  }
  std::stable_sort(report.violations.begin(), report.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.t_index < b.t_index; });
  return report;
}

namespace {

json neighbour(const std::vector<PhysicalCondition>& chain, long idx, const FeatureKey& key) {
  if (idx < 0 || idx >= static_cast<long>(chain.size())) return nullptr;
  const formula::Quantity* q = chain[static_cast<std::size_t>(idx)].find(key);
  return q ? formula::to_json(*q) : json(nullptr);
}

formula::Quantity& slot(std::vector<PhysicalCondition>& chain, std::size_t idx, const FeatureKey& key) {
  auto& c = chain[idx];
  if (key.first == kDerivedObject) return c.derived.at(key.second);
  return c.params.at(key.first).at(key.second);
}

}  // namespace

std::vector<PhysicalCondition> reinfer_on_violation(const ValidationReport& report,
                                                    std::vector<PhysicalCondition> chain,
                                                    const MonotoneDecls& decls,
                                                    backends::ReasoningBackend& reasoner,
                                                    const ReinferOptions& options,
                                                    ValidationReport* final_report) {
  if (report.accepted()) throw PreconditionError("reinfer_on_violation called with no violations");
  ValidationReport current = report;
  int retries = 0;
  std::optional<DimensionError> last_dimension_error;
  while (!current.accepted()) {
    if (retries >= options.max_retries) {
      if (last_dimension_error) throw *last_dimension_error;
      current.retry_count = retries;
      throw ReInferenceExhaustedError(current, "continuity still violated after " + std::to_string(retries) +
                                                   " re-inference rounds (" +
                                                   std::to_string(current.violations.size()) + " violations)");
    }
    ++retries;
    last_dimension_error.reset();
    std::set<std::tuple<int, std::string, std::string>> done;
    try {
      for (const auto& v : current.violations) {
        if (!done.insert({v.t_index, v.symbol, v.object_id}).second) continue;
        const FeatureKey key{v.object_id, v.symbol};
        const long idx = static_cast<long>(std::find_if(chain.begin(), chain.end(), [&](const auto& c) {
                                             return c.t_index == v.t_index;
                                           }) - chain.begin());
        if (idx >= static_cast<long>(chain.size()))
          throw PreconditionError("violation refers to unknown t_index " + std::to_string(v.t_index));
        formula::Quantity& q = slot(chain, static_cast<std::size_t>(idx), key);
        auto d = decls.find(v.symbol);
        const json payload = {{"description", options.description},
                              {"t_index", v.t_index},
                              {"object", v.object_id},
                              {"symbol", v.symbol},
                              {"unit", q.dimension.to_unit_string()},
                              {"kind", v.kind},
                              {"observed", formula::to_json(q)},
                              {"previous", neighbour(chain, idx - 1, key)},
                              {"before_previous", neighbour(chain, idx - 2, key)},
                              {"next", neighbour(chain, idx + 1, key)},
                              {"declared", d == decls.end() ? "free" : to_string(d->second)}};
        const json out = backends::reason_task(reasoner, backends::Task::kRepairParameter, payload);
        const formula::Quantity repaired = formula::quantity_from_json(out.at("value"), q.dimension);
        q.value = repaired.value;
      }
    } catch (const DimensionError& e) {
      last_dimension_error = e;
    }
    current = validate_continuity(chain, decls, options.kappa);
    current.retry_count = retries;
  }
  if (final_report) *final_report = current;
  return chain;
}

}  // namespace cce::event
