#pragma once

// Per-slice frequency-domain scheduling algorithms and their registry.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hexsim/ids.hpp"

namespace hexsim::fssf {

// One DRB as seen by a slice algorithm.
struct AlgoDrb {
  DrbId drb_id;
  UeId ue_id;
  int bearer_priority = 1;
  int demand_rb = 0;
  double per_rb_bits = 0.0;  // bits per RB per TTI for the owning UE
  double avg_bits = 0.0;     // smoothed served bits per TTI (proportional fair)
};

// Read-only per-slice scheduling history supplied by the caller.
struct AlgoState {
  std::size_t rr_cursor = 0;
};

// Pure allocation procedure: returns per-DRB RB counts aligned with `drbs`,
// each ≤ demand, summing to ≤ budget.
using SliceAlgorithm =
    std::function<std::vector<int>(int budget, const std::vector<AlgoDrb>& drbs, const AlgoState&)>;

// Weighted max-min fair share of `budget` over integer demands. Continuous
// water-filling followed by largest-remainder rounding; remainder ties go to
// the entry appearing first in `tie_order` (a permutation of indices).
std::vector<int> weighted_fair_share(int budget, const std::vector<int>& demands,
                                     const std::vector<double>& weights,
                                     const std::vector<std::size_t>& tie_order);

// Default bearer-priority weight: 1 / bearer_priority.
double inverse_priority_weight(int bearer_priority);

SliceAlgorithm make_priority_weighted(std::function<double(int)> weight = inverse_priority_weight);
// Weight table keyed by bearer priority; priorities not in the table fall back to 1/p.
SliceAlgorithm make_priority_weighted(std::map<int, double> table);
SliceAlgorithm make_round_robin();
SliceAlgorithm make_proportional_fair();
SliceAlgorithm make_max_throughput();

class AlgorithmRegistry {
 public:
  // Registry pre-populated with round_robin, proportional_fair, max_throughput
  // and priority_weighted.
  static AlgorithmRegistry with_builtins();

  // Re-registering an id replaces the previous algorithm.
  void add(const std::string& id, SliceAlgorithm algorithm);
  bool contains(const std::string& id) const { return algorithms_.contains(id); }
  // Throws Error(InvalidInput) for unknown ids.
  const SliceAlgorithm& get(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, SliceAlgorithm> algorithms_;
};

// Shared immutable registry with the built-in algorithms.
const AlgorithmRegistry& builtin_registry();

}  // namespace hexsim::fssf
