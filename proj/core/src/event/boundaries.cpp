#include "cce/event/boundaries.hpp"

#include <algorithm>
#include <cmath>

#include "cce/error.hpp"

namespace cce::event {

namespace {

template <typename Fn>
void for_each_feature(const TrajectorySample& s, Fn&& fn) {
  for (const auto& [obj, b] : s.params)
    for (const auto& [sym, q] : b) fn(FeatureKey{obj, sym}, q.value);
  for (const auto& [sym, q] : s.derived) fn(FeatureKey{kDerivedObject, sym}, q.value);
}

}  // namespace

Normalizer::Normalizer(const ParameterTrajectory& traj) {
  for (const auto& s : traj.samples)
    for_each_feature(s, [&](const FeatureKey& k, double v) {
      auto [it, fresh] = ranges_.try_emplace(k, v, v);
      if (!fresh) {
        it->second.first = std::min(it->second.first, v);
        it->second.second = std::max(it->second.second, v);
      }
    });
}

double Normalizer::normalize(const FeatureKey& key, double v) const {
  auto it = ranges_.find(key);
  if (it == ranges_.end()) return 0.0;
  const auto [lo, hi] = it->second;
  return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

std::vector<double> step_scores(const ParameterTrajectory& traj) {
  if (traj.samples.size() < 2)
    throw DegenerateTrajectoryError("boundary detection needs at least 2 samples, got " +
                                    std::to_string(traj.samples.size()));
  const Normalizer norm(traj);
  std::vector<double> scores(traj.samples.size(), 0.0);
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const auto& prev = traj.samples[i - 1];
    double sum = 0.0;
    for_each_feature(traj.samples[i], [&](const FeatureKey& k, double v) {
      const formula::Quantity* before = nullptr;
      if (k.first == kDerivedObject) {
        if (auto it = prev.derived.find(k.second); it != prev.derived.end()) before = &it->second;
      } else if (auto o = prev.params.find(k.first); o != prev.params.end()) {
        if (auto it = o->second.find(k.second); it != o->second.end()) before = &it->second;
      }
      if (!before) throw PreconditionError("trajectory schema changes at sample " + std::to_string(i));
      const double d = norm.normalize(k, v) - norm.normalize(k, before->value);
      sum += d * d;
    });
    scores[i] = std::sqrt(sum);
  }
  return scores;
}

std::vector<std::size_t> detect_boundaries(const ParameterTrajectory& traj, double tau_p, int min_gap) {
  if (tau_p < 0.0) throw PreconditionError("tau_p must be >= 0");
  const auto scores = step_scores(traj);
  std::vector<std::size_t> out;
  std::size_t prev = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (!(scores[i] > tau_p)) continue;
    if (min_gap > 1 && i - prev < static_cast<std::size_t>(min_gap)) continue;
    out.push_back(i);
    prev = i;
  }
  return out;
}

const formula::Quantity* PhysicalCondition::find(const FeatureKey& key) const {
  if (key.first == kDerivedObject) {
    auto it = derived.find(key.second);
    return it == derived.end() ? nullptr : &it->second;
  }
  auto o = params.find(key.first);
  if (o == params.end()) return nullptr;
  auto it = o->second.find(key.second);
  return it == o->second.end() ? nullptr : &it->second;
}

std::vector<std::size_t> cap_boundaries(const std::vector<std::size_t>& boundaries,
                                        const std::vector<double>& scores, int max_events) {
  if (max_events < 1) throw PreconditionError("max_events must be >= 1");
  const auto keep = static_cast<std::size_t>(max_events - 1);
  if (boundaries.size() <= keep) return boundaries;
  std::vector<std::size_t> ranked = boundaries;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return scores.at(a) > scores.at(b); });
  ranked.resize(keep);
  std::sort(ranked.begin(), ranked.end());
  return ranked;
}

std::vector<PhysicalCondition> segment(const ParameterTrajectory& traj,
                                       const std::vector<std::size_t>& boundaries, int max_events) {
  const std::size_t n = traj.samples.size();
  if (n == 0) throw DegenerateTrajectoryError("cannot segment an empty trajectory");
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (boundaries[i] == 0 || boundaries[i] >= n)
      throw PreconditionError("boundary " + std::to_string(boundaries[i]) + " out of range");
    if (i > 0 && boundaries[i] <= boundaries[i - 1])
      throw PreconditionError("boundaries must be strictly ascending");
  }
  std::vector<std::size_t> kept = boundaries;
  if (kept.size() + 1 > static_cast<std::size_t>(std::max(max_events, 1)))
    kept = cap_boundaries(boundaries, step_scores(traj), max_events);

  std::vector<std::size_t> cuts = {0};
  cuts.insert(cuts.end(), kept.begin(), kept.end());
  cuts.push_back(n);
  std::vector<PhysicalCondition> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const auto& last = traj.samples[cuts[k + 1] - 1];
    PhysicalCondition c;
    c.t_index = static_cast<int>(k) + 1;
    c.params = last.params;
    c.derived = last.derived;
    c.first_sample = cuts[k];
    c.end_sample = cuts[k + 1];
    c.start = traj.samples[cuts[k]].time;
    c.end = cuts[k + 1] < n ? traj.samples[cuts[k + 1]].time : traj.samples.back().time;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cce::event
