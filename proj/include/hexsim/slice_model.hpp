#pragma once

// FlexiSlice context: slices, bearers, UEs and the slice state machine.
//
// FsContext is a plain single-writer value type. Concurrency (staging,
// TTI-boundary publication) lives in pml::FsStore.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hexsim/ids.hpp"
#include "json.hpp"

namespace hexsim::fs {

using nlohmann::json;

enum class SliceState : std::uint8_t { Idle, Dedicated, Prioritized, Shared, Hybrid };

inline constexpr SliceState kAllSliceStates[] = {SliceState::Idle, SliceState::Dedicated,
                                                 SliceState::Prioritized, SliceState::Shared,
                                                 SliceState::Hybrid};

std::string_view to_string(SliceState s);
std::optional<SliceState> parse_slice_state(std::string_view s);
constexpr bool is_active(SliceState s) { return s != SliceState::Idle; }

struct RadioResourceConfig {
  int dedicated_rb = 0;
  int prioritized_rb = 0;
  int shared_priority = 1;

  int reserved_rb() const { return dedicated_rb + prioritized_rb; }
  friend bool operator==(const RadioResourceConfig&, const RadioResourceConfig&) = default;
};

// Throws Error(InvalidResourceConfig) when `rrc` is not a legal configuration for `state`.
// Idle slices are validated against the state they will activate into.
void validate_rrc(SliceState state, const RadioResourceConfig& rrc);

struct BearerStats {
  double throughput_mbps = 0.0;
  double packet_delay_ms = 0.0;
  double packet_loss_rate = 0.0;
  double buffer_bytes = 0.0;

  friend bool operator==(const BearerStats&, const BearerStats&) = default;
};

struct Bearer {
  DrbId drb_id;
  UeId ue_id;
  SliceId slice_id;
  int bearer_priority = 1;  // 1 = highest
  int qos_5qi = 9;
  BearerStats stats;

  friend bool operator==(const Bearer&, const Bearer&) = default;
};

struct UeContext {
  UeId ue_id;
  int mcs = 28;
  int cqi = 15;
  double bler = 0.0;
  std::vector<DrbId> bearers;

  friend bool operator==(const UeContext&, const UeContext&) = default;
};

struct SliceConfig {
  SliceId slice_id;
  SliceState default_active_state = SliceState::Shared;
  RadioResourceConfig rrc;
  std::string fd_scheduler = "priority_weighted";
  std::set<std::string> hu_associations;
};

struct SliceContext {
  SliceId slice_id;
  SliceState state = SliceState::Idle;
  SliceState default_active_state = SliceState::Shared;
  RadioResourceConfig rrc;
  std::string fd_scheduler;
  std::set<std::string> hu_associations;
  std::vector<DrbId> bearers;

  friend bool operator==(const SliceContext&, const SliceContext&) = default;
};

struct Trigger {
  std::string procedure;
  std::string source;
};

enum class ChangeKind : std::uint8_t { HuAssoc, Scheduler, ResourceConfig, BearerList };
std::string_view to_string(ChangeKind k);

struct ChangeOutcome {
  ChangeKind kind;
  json before;
  json after;
};

struct ContextChangeRecord {
  SliceId slice_id;
  std::uint64_t seq = 0;         // per slice, gap-free from 1
  std::uint64_t global_seq = 0;  // context wide, used by change queries
  Trigger trigger;
  std::vector<ChangeOutcome> outcomes;
};

struct Targets {
  std::vector<SliceId> slices;
  std::vector<UeId> ues;

  bool empty() const { return slices.empty() && ues.empty(); }
};

struct BearerReport {
  DrbId drb_id;
  UeId ue_id;
  int bearer_priority = 1;
  int qos_5qi = 9;
  BearerStats stats;
};

struct SliceReport {
  SliceId slice_id;
  SliceState state = SliceState::Idle;
  std::set<std::string> hu_associations;
  std::string fd_scheduler;
  RadioResourceConfig rrc;
  std::vector<BearerReport> bearers;
};

struct UeReport {
  UeId ue_id;
  int mcs = 0;
  int cqi = 0;
  double bler = 0.0;
  std::vector<BearerReport> bearers;
};

struct ContextReport {
  std::vector<SliceReport> slices;
  std::vector<UeReport> ues;
};

class FsContext {
 public:
  static constexpr std::size_t kDefaultChangeLogCapacity = 4096;
  static constexpr double kStatsWindowMs = 100.0;

  explicit FsContext(int total_rb, std::size_t change_log_capacity = kDefaultChangeLogCapacity);

  int total_rb() const { return total_rb_; }

  const SliceContext& create_slice(const SliceConfig& config,
                                   const Trigger& trigger = {"Slice Creation", "oam"});
  const SliceContext& add_drb(SliceId slice, const Bearer& bearer,
                              const Trigger& trigger = {"DRB Addition", "ran"});
  const SliceContext& remove_drb(SliceId slice, DrbId drb,
                                 const Trigger& trigger = {"DRB Release", "ran"});
  const SliceContext& request_state_change(SliceId slice, SliceState new_state,
                                           const RadioResourceConfig& new_rrc,
                                           const Trigger& trigger);
  const SliceContext& set_scheduler(SliceId slice, const std::string& algorithm,
                                    const Trigger& trigger);
  const SliceContext& set_hu_associations(SliceId slice, const std::set<std::string>& hus,
                                          const Trigger& trigger);
  void set_bearer_priority(DrbId drb, int bearer_priority, const Trigger& trigger);

  // RAN-owned link state; creates the UE when unknown.
  UeContext& ensure_ue(UeId ue);
  void set_link_state(UeId ue, int mcs, int cqi, double bler);

  // Folds one TTI worth of measurements into the smoothed bearer statistics.
  void record_bearer_sample(DrbId drb, const BearerStats& sample, double dt_ms);

  ContextReport snapshot(const Targets& targets) const;
  std::vector<ContextChangeRecord> changes_since(std::uint64_t global_seq) const;
  std::uint64_t latest_change_seq() const { return next_global_seq_ - 1; }

  // Replaces configuration (slices, bearer membership, priorities, change log
  // cursor) with `staged`, keeping statistics and link state owned here.
  void adopt_config(const FsContext& staged);

  // Copy without the change log.
  FsContext config_copy() const;
  // Replaces this context with `scratch`, a config_copy() of it mutated since,
  // appending the change records made on `scratch` to this history.
  void commit_transaction(FsContext&& scratch);

  bool has_slice(SliceId id) const { return slices_.contains(id); }
  bool has_ue(UeId id) const { return ues_.contains(id); }
  bool has_drb(DrbId id) const { return bearers_.contains(id); }
  const SliceContext& slice(SliceId id) const;
  const Bearer& bearer(DrbId id) const;
  const UeContext& ue(UeId id) const;
  const std::map<SliceId, SliceContext>& slices() const { return slices_; }
  const std::map<DrbId, Bearer>& bearers() const { return bearers_; }
  const std::map<UeId, UeContext>& ues() const { return ues_; }
  const std::deque<ContextChangeRecord>& change_log(SliceId id) const;

  // Sum of dedicated+prioritized RBs over all slices, optionally replacing one slice's config.
  int reserved_rb(std::optional<std::pair<SliceId, RadioResourceConfig>> replace = {}) const;

 private:
  SliceContext& mutable_slice(SliceId id);
  void append_change(SliceId slice, const Trigger& trigger, std::vector<ChangeOutcome> outcomes);
  void check_capacity(SliceId slice, const RadioResourceConfig& rrc) const;

  int total_rb_;
  std::size_t change_log_capacity_;
  std::map<SliceId, SliceContext> slices_;
  std::map<DrbId, Bearer> bearers_;
  std::map<UeId, UeContext> ues_;
  std::map<SliceId, std::deque<ContextChangeRecord>> change_logs_;
  std::map<SliceId, std::uint64_t> next_slice_seq_;
  std::uint64_t next_global_seq_ = 1;
};

json state_json(const SliceContext& s);

void to_json(json& j, const RadioResourceConfig& rrc);
void to_json(json& j, const BearerStats& s);
void to_json(json& j, const BearerReport& b);
void to_json(json& j, const SliceReport& s);
void to_json(json& j, const UeReport& u);
void to_json(json& j, const ContextReport& r);
void to_json(json& j, const Trigger& t);
void to_json(json& j, const ContextChangeRecord& r);
void to_json(json& j, const Targets& t);

void from_json(const json& j, RadioResourceConfig& rrc);
void from_json(const json& j, BearerStats& s);
void from_json(const json& j, BearerReport& b);
void from_json(const json& j, SliceReport& s);
void from_json(const json& j, UeReport& u);
void from_json(const json& j, ContextReport& r);
void from_json(const json& j, Targets& t);

}  // namespace hexsim::fs
