#include "hexsim/fssf.hpp"

#include <algorithm>
#include <unordered_map>

#include "hexsim/error.hpp"

namespace hexsim::fssf {

namespace {

using fs::SliceState;

const AlgorithmRegistry& registry_of(const SchedulerConfig& config) {
  return config.registry != nullptr ? *config.registry : builtin_registry();
}

bool in_dph_list(SliceState s) {
  return s == SliceState::Dedicated || s == SliceState::Prioritized || s == SliceState::Hybrid;
}

// Non-Idle slices in ascending slice_id.
std::vector<const SliceInput*> active_slices(const TtiInput& input) {
  std::vector<const SliceInput*> out;
  for (const auto& s : input.slices) {
    if (fs::is_active(s.state)) out.push_back(&s);
  }
  std::sort(out.begin(), out.end(),
            [](const auto* a, const auto* b) { return a->slice_id < b->slice_id; });
  return out;
}

const SliceInput& find_slice(const TtiInput& input, SliceId id) {
  for (const auto& s : input.slices) {
    if (s.slice_id == id) return s;
  }
  throw Error(Errc::InvalidInput, "slice missing from input");
}

void validate(const TtiInput& input) {
  if (input.total_rb <= 0) throw Error(Errc::InvalidInput, "total_rb must be positive");
  std::unordered_map<UeId, bool> ues;
  for (const auto& u : input.schedulable_ues) ues[u.ue_id] = true;
  long reserved = 0;
  for (const auto* s : active_slices(input)) {
    if (s->rrc.dedicated_rb < 0 || s->rrc.prioritized_rb < 0) {
      throw Error(Errc::InfeasibleSnapshot, "negative reservation");
    }
    reserved += s->rrc.reserved_rb();
    for (const auto& d : s->drbs) {
      if (d.demand_rb < 0) throw Error(Errc::InvalidInput, "negative demand");
      if (d.demand_rb > 0 && !ues.contains(d.ue_id)) {
        throw Error(Errc::InvalidInput, "demand for unschedulable ue " + std::to_string(d.ue_id.value));
      }
    }
  }
  if (reserved > input.total_rb) {
    throw Error(Errc::InfeasibleSnapshot, "reserved " + std::to_string(reserved) + " of " +
                                              std::to_string(input.total_rb) + " RBs");
  }
}

struct SliceWork {
  std::vector<AlgoDrb> drbs;  // ascending drb_id
  AlgoState state;
};

// Builds the algorithm view of a slice; demand is reduced by RBs already granted in `partial`.
SliceWork slice_work(const TtiInput& input, const SliceInput& slice, const AllocationPlan* partial) {
  std::unordered_map<UeId, double> rate;
  for (const auto& u : input.schedulable_ues) rate[u.ue_id] = u.per_rb_bits;

  SliceWork w;
  for (const auto& d : slice.drbs) {
    AlgoDrb a;
    a.drb_id = d.drb_id;
    a.ue_id = d.ue_id;
    a.bearer_priority = d.bearer_priority;
    a.demand_rb = d.demand_rb;
    if (partial != nullptr) {
      if (auto it = partial->per_drb_rb.find(d.drb_id); it != partial->per_drb_rb.end()) {
        a.demand_rb -= it->second;
      }
    }
    if (auto it = rate.find(d.ue_id); it != rate.end()) a.per_rb_bits = it->second;
    if (auto it = input.history.pf_avg_bits.find(d.drb_id); it != input.history.pf_avg_bits.end()) {
      a.avg_bits = it->second;
    }
    w.drbs.push_back(a);
  }
  std::sort(w.drbs.begin(), w.drbs.end(),
            [](const AlgoDrb& a, const AlgoDrb& b) { return a.drb_id < b.drb_id; });
  if (auto it = input.history.rr_cursor.find(slice.slice_id); it != input.history.rr_cursor.end()) {
    w.state.rr_cursor = it->second;
  }
  return w;
}

int run_algorithm(const SchedulerConfig& config, const SliceInput& slice, const SliceWork& work,
                  int budget, AllocationPlan& plan) {
  if (work.drbs.empty() || budget <= 0) return 0;
  const auto alloc = registry_of(config).get(slice.algorithm)(budget, work.drbs, work.state);
  int granted = 0;
  for (std::size_t i = 0; i < work.drbs.size(); ++i) {
    const int rb = std::clamp(alloc.at(i), 0, std::max(0, work.drbs[i].demand_rb));
    const int capped = std::min(rb, budget - granted);
    plan.per_drb_rb[work.drbs[i].drb_id] += capped;
    granted += capped;
  }
  return granted;
}

int slice_residual_demand(const SliceWork& work) {
  int total = 0;
  for (const auto& d : work.drbs) total += std::max(0, d.demand_rb);
  return total;
}

}  // namespace

int ScheduleDecision::allocated_rb() const {
  int total = 0;
  for (const auto& [_, rb] : plan.per_drb_rb) total += rb;
  return total;
}

Stage1Result stage1_slice_specific(const TtiInput& input, const SchedulerConfig& config) {
  validate(input);
  Stage1Result out;
  int reserved = 0;
  int donated = 0;
  for (const auto* s : active_slices(input)) {
    for (const auto& d : s->drbs) out.partial.per_drb_rb[d.drb_id] = 0;
    if (!in_dph_list(s->state)) {
      out.s_list.push_back(s->slice_id);
      continue;
    }
    const int budget = s->rrc.reserved_rb();
    reserved += budget;
    const int grant = run_algorithm(config, *s, slice_work(input, *s, nullptr), budget, out.partial);
    switch (s->state) {
      case SliceState::Prioritized:
        donated += s->rrc.prioritized_rb - grant;
        break;
      case SliceState::Hybrid:
        donated += s->rrc.prioritized_rb - std::max(0, grant - s->rrc.dedicated_rb);
        out.s_list.push_back(s->slice_id);
        break;
      default:
        break;
    }
  }
  out.shared_pool = input.total_rb - reserved + donated;

  std::stable_sort(out.s_list.begin(), out.s_list.end(), [&](SliceId a, SliceId b) {
    const int pa = find_slice(input, a).rrc.shared_priority;
    const int pb = find_slice(input, b).rrc.shared_priority;
    if (pa != pb) return pa > pb;
    return a < b;
  });
  out.partial.shared_pool_remaining = out.shared_pool;
  return out;
}

AllocationPlan stage2_shared(const Stage1Result& stage1, const TtiInput& input,
                             const SchedulerConfig& config) {
  AllocationPlan plan = stage1.partial;
  const int pool = std::max(0, stage1.shared_pool);

  std::vector<SliceWork> works;
  std::vector<int> demands;
  std::vector<double> weights;
  for (auto id : stage1.s_list) {
    const auto& s = find_slice(input, id);
    works.push_back(slice_work(input, s, &stage1.partial));
    demands.push_back(slice_residual_demand(works.back()));
    weights.push_back(std::max(1, s.rrc.shared_priority));
  }

  std::vector<int> grants(stage1.s_list.size(), 0);
  if (config.shared_policy == SharedPolicy::WeightedMaxMin) {
    std::vector<std::size_t> order(grants.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    grants = weighted_fair_share(pool, demands, weights, order);
  } else {
    int left = pool;
    for (std::size_t i = 0; i < grants.size(); ++i) {
      grants[i] = std::min(left, demands[i]);
      left -= grants[i];
    }
  }

  int used = 0;
  for (std::size_t i = 0; i < stage1.s_list.size(); ++i) {
    const auto& s = find_slice(input, stage1.s_list[i]);
    used += run_algorithm(config, s, works[i], grants[i], plan);
  }
  plan.shared_pool_remaining = pool - used;
  return plan;
}

VrbMap stage3_vrb_assignment(const AllocationPlan& plan, const TtiInput& input) {
  std::map<DrbId, UeId> owner;
  for (const auto& s : input.slices) {
    for (const auto& d : s.drbs) owner[d.drb_id] = d.ue_id;
  }
  std::map<UeId, int> per_ue;
  for (const auto& [drb, rb] : plan.per_drb_rb) {
    if (rb <= 0) continue;
    auto it = owner.find(drb);
    if (it == owner.end()) throw Error(Errc::InvalidInput, "allocation for unknown drb");
    per_ue[it->second] += rb;
  }
  VrbMap map;
  int next_free = 0;
  for (const auto& [ue, rb] : per_ue) {
    if (next_free + rb > input.total_rb) throw Error(Errc::InfeasibleSnapshot, "VRB overflow");
    map.per_ue_range[ue] = VrbRange{next_free, next_free + rb - 1};
    next_free += rb;
  }
  return map;
}

ScheduleDecision run_tti(const TtiInput& input, const SchedulerConfig& config) {
  ScheduleDecision d;
  const auto stage1 = stage1_slice_specific(input, config);
  d.plan = stage2_shared(stage1, input, config);
  d.vrbs = stage3_vrb_assignment(d.plan, input);

  std::unordered_map<UeId, double> rate;
  for (const auto& u : input.schedulable_ues) rate[u.ue_id] = u.per_rb_bits;
  for (const auto* s : active_slices(input)) {
    int slice_rb = 0;
    for (const auto& drb : s->drbs) {
      const int rb = d.plan.per_drb_rb[drb.drb_id];
      slice_rb += rb;
      const double served = rb * (rate.contains(drb.ue_id) ? rate[drb.ue_id] : 0.0);
      double avg = 0.0;
      if (auto it = input.history.pf_avg_bits.find(drb.drb_id);
          it != input.history.pf_avg_bits.end()) {
        avg = it->second;
      }
      d.next_history.pf_avg_bits[drb.drb_id] = avg + config.pf_smoothing * (served - avg);
    }
    d.per_slice_rb[s->slice_id] = slice_rb;
    if (!s->drbs.empty()) {
      std::size_t cursor = 0;
      if (auto it = input.history.rr_cursor.find(s->slice_id); it != input.history.rr_cursor.end()) {
        cursor = it->second;
      }
      d.next_history.rr_cursor[s->slice_id] = (cursor + 1) % s->drbs.size();
    }
  }
  return d;
}

}  // namespace hexsim::fssf
