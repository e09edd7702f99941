#pragma once

// FlexiSlice Scheduling Framework: per-TTI three-stage frequency-domain
// allocation. Every function here is pure.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hexsim/fssf_algorithms.hpp"
#include "hexsim/ids.hpp"
#include "hexsim/slice_model.hpp"

namespace hexsim::fssf {

struct UeRate {
  UeId ue_id;
  double per_rb_bits = 0.0;
};

struct DrbDemand {
  DrbId drb_id;
  UeId ue_id;
  int bearer_priority = 1;
  int demand_rb = 0;
};

struct SliceInput {
  SliceId slice_id;
  fs::SliceState state = fs::SliceState::Shared;
  fs::RadioResourceConfig rrc;
  std::string algorithm = "priority_weighted";
  std::vector<DrbDemand> drbs;
};

struct SchedulerHistory {
  std::map<SliceId, std::size_t> rr_cursor;
  std::map<DrbId, double> pf_avg_bits;

  friend bool operator==(const SchedulerHistory&, const SchedulerHistory&) = default;
};

struct TtiInput {
  std::uint64_t tti_index = 0;
  int total_rb = 0;
  std::vector<UeRate> schedulable_ues;
  std::vector<SliceInput> slices;  // non-Idle slices only; Idle entries are ignored
  SchedulerHistory history;
};

struct AllocationPlan {
  std::map<DrbId, int> per_drb_rb;
  int shared_pool_remaining = 0;

  friend bool operator==(const AllocationPlan&, const AllocationPlan&) = default;
};

struct VrbRange {
  int start_vrb = 0;
  int end_vrb = 0;  // inclusive

  int size() const { return end_vrb - start_vrb + 1; }
  friend bool operator==(const VrbRange&, const VrbRange&) = default;
};

struct VrbMap {
  std::map<UeId, VrbRange> per_ue_range;

  friend bool operator==(const VrbMap&, const VrbMap&) = default;
};

struct ScheduleDecision {
  AllocationPlan plan;
  VrbMap vrbs;
  std::map<SliceId, int> per_slice_rb;
  SchedulerHistory next_history;

  int allocated_rb() const;
  friend bool operator==(const ScheduleDecision&, const ScheduleDecision&) = default;
};

enum class SharedPolicy : std::uint8_t { WeightedMaxMin, SequentialGreedy };

struct SchedulerConfig {
  SharedPolicy shared_policy = SharedPolicy::WeightedMaxMin;
  const AlgorithmRegistry* registry = nullptr;  // null selects builtin_registry()
  double pf_smoothing = 0.01;                   // EWMA factor per TTI
};

struct Stage1Result {
  AllocationPlan partial;
  int shared_pool = 0;
  std::vector<SliceId> s_list;
};

Stage1Result stage1_slice_specific(const TtiInput& input, const SchedulerConfig& config = {});
AllocationPlan stage2_shared(const Stage1Result& stage1, const TtiInput& input,
                             const SchedulerConfig& config = {});
VrbMap stage3_vrb_assignment(const AllocationPlan& plan, const TtiInput& input);

// Stages 1 -> 2 -> 3 plus the next scheduling history.
ScheduleDecision run_tti(const TtiInput& input, const SchedulerConfig& config = {});

}  // namespace hexsim::fssf
