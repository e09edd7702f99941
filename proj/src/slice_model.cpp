#include "hexsim/slice_model.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "hexsim/error.hpp"

namespace hexsim::fs {

std::string_view to_string(SliceState s) {
  switch (s) {
    case SliceState::Idle: return "idle";
    case SliceState::Dedicated: return "dedicated";
    case SliceState::Prioritized: return "prioritized";
    case SliceState::Shared: return "shared";
    case SliceState::Hybrid: return "hybrid";
  }
  return "idle";
}

std::optional<SliceState> parse_slice_state(std::string_view s) {
  for (auto state : kAllSliceStates) {
    if (to_string(state) == s) return state;
  }
  return std::nullopt;
}

std::string_view to_string(ChangeKind k) {
  switch (k) {
    case ChangeKind::HuAssoc: return "hu_associations";
    case ChangeKind::Scheduler: return "scheduler";
    case ChangeKind::ResourceConfig: return "resource_config";
    case ChangeKind::BearerList: return "bearer_list";
  }
  return "resource_config";
}

void validate_rrc(SliceState state, const RadioResourceConfig& rrc) {
  if (rrc.dedicated_rb < 0 || rrc.prioritized_rb < 0) {
    throw Error(Errc::InvalidResourceConfig, "resource block counts must be non-negative");
  }
  if (rrc.shared_priority < 1) {
    throw Error(Errc::InvalidResourceConfig, "shared_priority must be >= 1");
  }
  switch (state) {
    case SliceState::Dedicated:
      if (rrc.prioritized_rb != 0) {
        throw Error(Errc::InvalidResourceConfig, "dedicated slice cannot hold prioritized RBs");
      }
      break;
    case SliceState::Prioritized:
      if (rrc.dedicated_rb != 0) {
        throw Error(Errc::InvalidResourceConfig, "prioritized slice cannot hold dedicated RBs");
      }
      break;
    case SliceState::Shared:
      if (rrc.reserved_rb() != 0) {
        throw Error(Errc::InvalidResourceConfig, "shared slice cannot reserve RBs");
      }
      break;
    case SliceState::Hybrid:
    case SliceState::Idle:
      break;
  }
}

json state_json(const SliceContext& s) {
  return json{{"state", to_string(s.state)},
              {"default_active_state", to_string(s.default_active_state)},
              {"rrc", s.rrc}};
}

namespace {

json bearer_list_json(const SliceContext& s) {
  json out = json::array();
  for (auto drb : s.bearers) out.push_back(drb.value);
  return out;
}

template <typename T>
void erase_value(std::vector<T>& v, const T& value) {
  v.erase(std::remove(v.begin(), v.end(), value), v.end());
}

}  // namespace

FsContext::FsContext(int total_rb, std::size_t change_log_capacity)
    : total_rb_(total_rb), change_log_capacity_(std::max<std::size_t>(1, change_log_capacity)) {
  if (total_rb <= 0) throw Error(Errc::InvalidInput, "total_rb must be positive");
}

const SliceContext& FsContext::slice(SliceId id) const {
  auto it = slices_.find(id);
  if (it == slices_.end()) throw Error(Errc::UnknownSlice, "slice " + std::to_string(id.value));
  return it->second;
}

SliceContext& FsContext::mutable_slice(SliceId id) {
  auto it = slices_.find(id);
  if (it == slices_.end()) throw Error(Errc::UnknownSlice, "slice " + std::to_string(id.value));
  return it->second;
}

const Bearer& FsContext::bearer(DrbId id) const {
  auto it = bearers_.find(id);
  if (it == bearers_.end()) throw Error(Errc::UnknownDrb, "drb " + std::to_string(id.value));
  return it->second;
}

const UeContext& FsContext::ue(UeId id) const {
  auto it = ues_.find(id);
  if (it == ues_.end()) throw Error(Errc::UnknownId, "ue " + std::to_string(id.value));
  return it->second;
}

const std::deque<ContextChangeRecord>& FsContext::change_log(SliceId id) const {
  static const std::deque<ContextChangeRecord> kEmpty;
  auto it = change_logs_.find(id);
  return it == change_logs_.end() ? kEmpty : it->second;
}

int FsContext::reserved_rb(std::optional<std::pair<SliceId, RadioResourceConfig>> replace) const {
  int total = 0;
  for (const auto& [id, s] : slices_) {
    if (replace && replace->first == id) continue;
    total += s.rrc.reserved_rb();
  }
  if (replace) total += replace->second.reserved_rb();
  return total;
}

void FsContext::check_capacity(SliceId slice, const RadioResourceConfig& rrc) const {
  const int reserved = reserved_rb(std::make_pair(slice, rrc));
  if (reserved > total_rb_) {
    throw Error(Errc::OverSubscription, "reserved " + std::to_string(reserved) + " of " +
                                            std::to_string(total_rb_) + " RBs");
  }
}

void FsContext::append_change(SliceId slice, const Trigger& trigger,
                              std::vector<ChangeOutcome> outcomes) {
  ContextChangeRecord rec;
  rec.slice_id = slice;
  rec.seq = ++next_slice_seq_[slice];
  rec.global_seq = next_global_seq_++;
  rec.trigger = trigger;
  rec.outcomes = std::move(outcomes);
  auto& log = change_logs_[slice];
  log.push_back(std::move(rec));
  while (log.size() > change_log_capacity_) log.pop_front();
}

const SliceContext& FsContext::create_slice(const SliceConfig& config, const Trigger& trigger) {
  if (slices_.contains(config.slice_id)) {
    throw Error(Errc::DuplicateSliceId, "slice " + std::to_string(config.slice_id.value));
  }
  if (!is_active(config.default_active_state)) {
    throw Error(Errc::InvalidResourceConfig, "default active state cannot be idle");
  }
  validate_rrc(config.default_active_state, config.rrc);
  check_capacity(config.slice_id, config.rrc);

  SliceContext s;
  s.slice_id = config.slice_id;
  s.state = SliceState::Idle;
  s.default_active_state = config.default_active_state;
  s.rrc = config.rrc;
  s.fd_scheduler = config.fd_scheduler;
  s.hu_associations = config.hu_associations;
  auto& inserted = slices_.emplace(s.slice_id, std::move(s)).first->second;

  append_change(inserted.slice_id, trigger,
                {{ChangeKind::ResourceConfig, nullptr, state_json(inserted)},
                 {ChangeKind::Scheduler, nullptr, inserted.fd_scheduler},
                 {ChangeKind::HuAssoc, nullptr, inserted.hu_associations}});
  return inserted;
}

UeContext& FsContext::ensure_ue(UeId ue) {
  auto [it, _] = ues_.try_emplace(ue);
  it->second.ue_id = ue;
  return it->second;
}

void FsContext::set_link_state(UeId ue, int mcs, int cqi, double bler) {
  if (mcs < 0 || mcs > 28 || cqi < 0 || cqi > 15 || !(bler >= 0.0 && bler <= 1.0)) {
    throw Error(Errc::InvalidInput, "link state out of range");
  }
  auto& u = ensure_ue(ue);
  u.mcs = mcs;
  u.cqi = cqi;
  u.bler = bler;
}

const SliceContext& FsContext::add_drb(SliceId slice_id, const Bearer& bearer,
                                       const Trigger& trigger) {
  auto& s = mutable_slice(slice_id);
  if (bearers_.contains(bearer.drb_id)) {
    throw Error(Errc::DuplicateDrb, "drb " + std::to_string(bearer.drb_id.value));
  }
  if (bearer.bearer_priority < 1) {
    throw Error(Errc::InvalidInput, "bearer_priority must be >= 1");
  }
  const json before_list = bearer_list_json(s);
  const json before_state = state_json(s);

  Bearer b = bearer;
  b.slice_id = slice_id;
  bearers_.emplace(b.drb_id, b);
  ensure_ue(b.ue_id).bearers.push_back(b.drb_id);
  s.bearers.push_back(b.drb_id);

  std::vector<ChangeOutcome> outcomes{{ChangeKind::BearerList, before_list, bearer_list_json(s)}};
  if (s.state == SliceState::Idle) {
    s.state = s.default_active_state;
    outcomes.push_back({ChangeKind::ResourceConfig, before_state, state_json(s)});
  }
  append_change(slice_id, trigger, std::move(outcomes));
  return s;
}

const SliceContext& FsContext::remove_drb(SliceId slice_id, DrbId drb, const Trigger& trigger) {
  auto& s = mutable_slice(slice_id);
  auto it = bearers_.find(drb);
  if (it == bearers_.end() || it->second.slice_id != slice_id) {
    throw Error(Errc::UnknownDrb, "drb " + std::to_string(drb.value) + " not on slice " +
                                      std::to_string(slice_id.value));
  }
  const json before_list = bearer_list_json(s);
  const json before_state = state_json(s);

  const UeId ue = it->second.ue_id;
  bearers_.erase(it);
  erase_value(s.bearers, drb);
  if (auto u = ues_.find(ue); u != ues_.end()) erase_value(u->second.bearers, drb);

  std::vector<ChangeOutcome> outcomes{{ChangeKind::BearerList, before_list, bearer_list_json(s)}};
  if (s.bearers.empty()) {
    bool changed = true;
    switch (s.state) {
      case SliceState::Prioritized:
      case SliceState::Shared:
        // The slice gives up its reservation and will reactivate as shared.
        s.state = SliceState::Idle;
        s.default_active_state = SliceState::Shared;
        s.rrc.dedicated_rb = 0;
        s.rrc.prioritized_rb = 0;
        break;
      case SliceState::Hybrid:
        s.state = SliceState::Dedicated;
        s.rrc.prioritized_rb = 0;
        break;
      case SliceState::Dedicated:
      case SliceState::Idle:
        changed = false;
        break;
    }
    if (changed) outcomes.push_back({ChangeKind::ResourceConfig, before_state, state_json(s)});
  }
  append_change(slice_id, trigger, std::move(outcomes));
  return s;
}

const SliceContext& FsContext::request_state_change(SliceId slice_id, SliceState new_state,
                                                    const RadioResourceConfig& new_rrc,
                                                    const Trigger& trigger) {
  auto& s = mutable_slice(slice_id);
  if (new_state == SliceState::Idle) {
    if (!s.bearers.empty()) {
      throw Error(Errc::InvalidResourceConfig, "slice with active bearers cannot be idle");
    }
    validate_rrc(s.default_active_state, new_rrc);
  } else {
    validate_rrc(new_state, new_rrc);
  }
  check_capacity(slice_id, new_rrc);

  const json before = state_json(s);
  if (s.state == SliceState::Idle && is_active(new_state)) {
    // An idle slice activates on its next DRB; the request retargets that activation.
    s.default_active_state = new_state;
  } else {
    s.state = new_state;
  }
  s.rrc = new_rrc;
  append_change(slice_id, trigger, {{ChangeKind::ResourceConfig, before, state_json(s)}});
  return s;
}

const SliceContext& FsContext::set_scheduler(SliceId slice_id, const std::string& algorithm,
                                             const Trigger& trigger) {
  auto& s = mutable_slice(slice_id);
  if (algorithm.empty()) throw Error(Errc::InvalidInput, "empty scheduler id");
  json before = s.fd_scheduler;
  s.fd_scheduler = algorithm;
  append_change(slice_id, trigger, {{ChangeKind::Scheduler, before, s.fd_scheduler}});
  return s;
}

const SliceContext& FsContext::set_hu_associations(SliceId slice_id,
                                                   const std::set<std::string>& hus,
                                                   const Trigger& trigger) {
  auto& s = mutable_slice(slice_id);
  json before = s.hu_associations;
  s.hu_associations = hus;
  append_change(slice_id, trigger, {{ChangeKind::HuAssoc, before, s.hu_associations}});
  return s;
}

void FsContext::set_bearer_priority(DrbId drb, int bearer_priority, const Trigger& trigger) {
  auto it = bearers_.find(drb);
  if (it == bearers_.end()) throw Error(Errc::UnknownDrb, "drb " + std::to_string(drb.value));
  if (bearer_priority < 1) throw Error(Errc::InvalidInput, "bearer_priority must be >= 1");
  auto& b = it->second;
  json before{{"drb_id", drb.value}, {"bearer_priority", b.bearer_priority}};
  b.bearer_priority = bearer_priority;
  json after{{"drb_id", drb.value}, {"bearer_priority", b.bearer_priority}};
  append_change(b.slice_id, trigger, {{ChangeKind::BearerList, before, after}});
}

void FsContext::record_bearer_sample(DrbId drb, const BearerStats& sample, double dt_ms) {
  auto it = bearers_.find(drb);
  if (it == bearers_.end()) return;
  const double alpha = 1.0 - std::exp(-dt_ms / kStatsWindowMs);
  auto& st = it->second.stats;
  st.throughput_mbps += alpha * (sample.throughput_mbps - st.throughput_mbps);
  st.packet_delay_ms += alpha * (sample.packet_delay_ms - st.packet_delay_ms);
  st.packet_loss_rate += alpha * (sample.packet_loss_rate - st.packet_loss_rate);
  st.buffer_bytes += alpha * (sample.buffer_bytes - st.buffer_bytes);
}

ContextReport FsContext::snapshot(const Targets& targets) const {
  auto bearer_report = [this](DrbId id) {
    const auto& b = bearers_.at(id);
    return BearerReport{b.drb_id, b.ue_id, b.bearer_priority, b.qos_5qi, b.stats};
  };

  ContextReport report;
  for (auto id : targets.slices) {
    auto it = slices_.find(id);
    if (it == slices_.end()) throw Error(Errc::UnknownId, "slice " + std::to_string(id.value));
    const auto& s = it->second;
    SliceReport r{s.slice_id, s.state, s.hu_associations, s.fd_scheduler, s.rrc, {}};
    for (auto drb : s.bearers) r.bearers.push_back(bearer_report(drb));
    report.slices.push_back(std::move(r));
  }
  for (auto id : targets.ues) {
    auto it = ues_.find(id);
    if (it == ues_.end()) throw Error(Errc::UnknownId, "ue " + std::to_string(id.value));
    const auto& u = it->second;
    UeReport r{u.ue_id, u.mcs, u.cqi, u.bler, {}};
    for (auto drb : u.bearers) r.bearers.push_back(bearer_report(drb));
    report.ues.push_back(std::move(r));
  }
  return report;
}

std::vector<ContextChangeRecord> FsContext::changes_since(std::uint64_t global_seq) const {
  std::vector<ContextChangeRecord> out;
  for (const auto& [_, log] : change_logs_) {
    // Logs are ordered by global_seq, so only the tail can qualify.
    auto it = log.end();
    while (it != log.begin() && std::prev(it)->global_seq > global_seq) --it;
    out.insert(out.end(), it, log.end());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.global_seq < b.global_seq; });
  return out;
}

void FsContext::adopt_config(const FsContext& staged) {
  total_rb_ = staged.total_rb_;
  slices_ = staged.slices_;

  std::map<DrbId, Bearer> bearers;
  for (const auto& [id, b] : staged.bearers_) {
    Bearer copy = b;
    if (auto old = bearers_.find(id); old != bearers_.end()) copy.stats = old->second.stats;
    bearers.emplace(id, std::move(copy));
  }
  bearers_ = std::move(bearers);

  std::map<UeId, UeContext> ues;
  for (const auto& [id, u] : staged.ues_) {
    UeContext copy = u;
    if (auto old = ues_.find(id); old != ues_.end()) {
      copy.mcs = old->second.mcs;
      copy.cqi = old->second.cqi;
      copy.bler = old->second.bler;
    }
    ues.emplace(id, std::move(copy));
  }
  ues_ = std::move(ues);
  next_global_seq_ = staged.next_global_seq_;
}

void FsContext::commit_transaction(FsContext&& scratch) {
  for (auto& [slice, records] : scratch.change_logs_) {
    auto& log = change_logs_[slice];
    for (auto& rec : records) log.push_back(std::move(rec));
    while (log.size() > change_log_capacity_) log.pop_front();
  }
  scratch.change_logs_ = std::move(change_logs_);
  *this = std::move(scratch);
}

FsContext FsContext::config_copy() const {
  FsContext c(total_rb_, change_log_capacity_);
  c.slices_ = slices_;
  c.bearers_ = bearers_;
  c.ues_ = ues_;
  c.next_slice_seq_ = next_slice_seq_;
  c.next_global_seq_ = next_global_seq_;
  return c;
}

void to_json(json& j, const RadioResourceConfig& rrc) {
  j = json{{"dedicated_rb", rrc.dedicated_rb},
           {"prioritized_rb", rrc.prioritized_rb},
           {"shared_priority", rrc.shared_priority}};
}

void to_json(json& j, const BearerStats& s) {
  j = json{{"throughput_mbps", s.throughput_mbps},
           {"packet_delay_ms", s.packet_delay_ms},
           {"packet_loss_rate", s.packet_loss_rate},
           {"buffer_bytes", s.buffer_bytes}};
}

void to_json(json& j, const BearerReport& b) {
  j = json{{"drb_id", b.drb_id}, {"ue_id", b.ue_id}, {"bearer_priority", b.bearer_priority},
           {"qos_5qi", b.qos_5qi}};
  j.update(json(b.stats));
}

void to_json(json& j, const SliceReport& s) {
  j = json{{"slice_id", s.slice_id},
           {"state", to_string(s.state)},
           {"hu_associations", s.hu_associations},
           {"fd_scheduler", s.fd_scheduler},
           {"rrc", s.rrc},
           {"bearers", s.bearers}};
}

void to_json(json& j, const UeReport& u) {
  j = json{{"ue_id", u.ue_id}, {"mcs", u.mcs}, {"cqi", u.cqi}, {"bler", u.bler},
           {"bearers", u.bearers}};
}

void to_json(json& j, const ContextReport& r) {
  j = json{{"slices", r.slices}, {"ues", r.ues}};
}

void to_json(json& j, const Trigger& t) {
  j = json{{"procedure", t.procedure}, {"source", t.source}};
}

void to_json(json& j, const ContextChangeRecord& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    outcomes.push_back({{"kind", to_string(o.kind)}, {"before", o.before}, {"after", o.after}});
  }
  j = json{{"slice_id", r.slice_id}, {"seq", r.seq},       {"global_seq", r.global_seq},
           {"trigger", r.trigger},   {"outcomes", outcomes}};
}

void to_json(json& j, const Targets& t) {
  j = json{{"slices", t.slices}, {"ues", t.ues}};
}

void from_json(const json& j, RadioResourceConfig& rrc) {
  j.at("dedicated_rb").get_to(rrc.dedicated_rb);
  j.at("prioritized_rb").get_to(rrc.prioritized_rb);
  j.at("shared_priority").get_to(rrc.shared_priority);
}

void from_json(const json& j, BearerStats& s) {
  j.at("throughput_mbps").get_to(s.throughput_mbps);
  j.at("packet_delay_ms").get_to(s.packet_delay_ms);
  j.at("packet_loss_rate").get_to(s.packet_loss_rate);
  j.at("buffer_bytes").get_to(s.buffer_bytes);
}

void from_json(const json& j, BearerReport& b) {
  j.at("drb_id").get_to(b.drb_id);
  j.at("ue_id").get_to(b.ue_id);
  j.at("bearer_priority").get_to(b.bearer_priority);
  j.at("qos_5qi").get_to(b.qos_5qi);
  from_json(j, b.stats);
}

void from_json(const json& j, SliceReport& s) {
  j.at("slice_id").get_to(s.slice_id);
  const auto state = parse_slice_state(j.at("state").get<std::string>());
  if (!state) throw Error(Errc::InvalidInput, "unknown slice state");
  s.state = *state;
  j.at("hu_associations").get_to(s.hu_associations);
  j.at("fd_scheduler").get_to(s.fd_scheduler);
  j.at("rrc").get_to(s.rrc);
  j.at("bearers").get_to(s.bearers);
}

void from_json(const json& j, UeReport& u) {
  j.at("ue_id").get_to(u.ue_id);
  j.at("mcs").get_to(u.mcs);
  j.at("cqi").get_to(u.cqi);
  j.at("bler").get_to(u.bler);
  j.at("bearers").get_to(u.bearers);
}

void from_json(const json& j, ContextReport& r) {
  if (j.contains("slices")) j.at("slices").get_to(r.slices);
  if (j.contains("ues")) j.at("ues").get_to(r.ues);
}

void from_json(const json& j, Targets& t) {
  if (j.contains("slices")) j.at("slices").get_to(t.slices);
  if (j.contains("ues")) j.at("ues").get_to(t.ues);
}

}  // namespace hexsim::fs
