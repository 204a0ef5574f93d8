#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cce/event/trajectory.hpp"

namespace cce::event {

/// (object id, symbol); derived quantities use kDerivedObject.
using FeatureKey = std::pair<std::string, std::string>;

/// Per-feature min-max ranges over a whole trajectory.
class Normalizer {
 public:
  explicit Normalizer(const ParameterTrajectory& traj);

  /// (v - min) / (max - min); 0 for constant or unknown features.
  double normalize(const FeatureKey& key, double v) const;
  const std::map<FeatureKey, std::pair<double, double>>& ranges() const { return ranges_; }

 private:
  std::map<FeatureKey, std::pair<double, double>> ranges_;
};

/// L2 norm of the normalized change between consecutive samples over every
/// object parameter and derived quantity; element 0 is 0.
std::vector<double> step_scores(const ParameterTrajectory& traj);

/// Indices i with score(i) > tau_p and i - previous boundary >= min_gap,
/// where the previous boundary starts at 0. min_gap <= 1 disables the gap.
std::vector<std::size_t> detect_boundaries(const ParameterTrajectory& traj, double tau_p,
                                           int min_gap = 2);

struct PhysicalCondition {
  int t_index = 1;
  ObjectParams params;
  formula::Bindings derived;
  double start = 0.0;
  double end = 0.0;
  std::size_t first_sample = 0;
  std::size_t end_sample = 0;

  /// Parameter or derived value for a feature key; nullptr when absent.
  const formula::Quantity* find(const FeatureKey& key) const;

  bool operator==(const PhysicalCondition&) const = default;
};

/// Keeps the max_events - 1 highest-scoring boundaries (earlier index wins
/// ties), returned ascending.
std::vector<std::size_t> cap_boundaries(const std::vector<std::size_t>& boundaries,
                                        const std::vector<double>& scores, int max_events);

/// One condition per segment holding the segment's final sample. Segment i
/// covers samples [b_i, b_{i+1}) and time [t(b_i), t(b_{i+1})]; the last
/// segment ends at the final sample time.
std::vector<PhysicalCondition> segment(const ParameterTrajectory& traj,
                                       const std::vector<std::size_t>& boundaries,
                                       int max_events = 6);

}  // namespace cce::event
