#include "hexsim/radio_sim.hpp"

#include <algorithm>
#include <cmath>

#include "hexsim/error.hpp"

namespace hexsim::radio {

namespace {

// Spectral efficiency relative to the top MCS; the calibrated per-RB rate applies at MCS 28.
double mcs_efficiency(int mcs) { return std::clamp(mcs + 1, 1, 29) / 29.0; }

}  // namespace

void validate(const CellConfig& c) {
  if (c.total_rb <= 0 || c.per_rb_rate_mbps <= 0.0 || c.tti_ms <= 0.0 || c.window_ttis <= 0) {
    throw Error(Errc::InvalidInput, "cell needs positive total_rb, per_rb_rate, tti and window");
  }
}

void TrafficProfile::set_rate(DrbId drb, std::uint64_t t_ms, double mbps) {
  if (!(mbps >= 0.0)) throw Error(Errc::InvalidInput, "offered rate must be non-negative");
  steps_[drb][t_ms] = mbps;
}

double TrafficProfile::rate_at(DrbId drb, std::uint64_t t_ms) const {
  auto it = steps_.find(drb);
  if (it == steps_.end()) return 0.0;
  auto step = it->second.upper_bound(t_ms);
  if (step == it->second.begin()) return 0.0;
  return std::prev(step)->second;
}

Cell::Cell(CellConfig config, fs::FsStore& store, fs::FsPlugin* plugin, fssf::SchedulerConfig scheduler,
           std::uint64_t seed)
    : config_(config), store_(store), plugin_(plugin), scheduler_(scheduler), rng_(seed) {
  validate(config_);
}

std::uint64_t Cell::now_ms() const {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(tti_) * config_.tti_ms));
}

void Cell::set_link_state(UeId ue, const LinkState& link) { links_[ue] = link; }

double Cell::served_rate_bps(const DrbState& d) const {
  if (d.served.empty()) return 0.0;
  return d.served_sum / (static_cast<double>(d.served.size()) * config_.tti_ms / 1e3);
}

TtiMetrics Cell::step_tti() {
  const auto now = now_ms();
  if (plugin_) {
    plugin_->on_tti(now);
  } else {
    store_.on_tti_boundary();
  }
  for (const auto& hook : hooks_) hook(tti_, now);

  auto& live = store_.live();
  for (const auto& [ue, link] : links_) {
    if (live.has_ue(ue)) live.set_link_state(ue, link.mcs, link.cqi, link.bler);
  }

  std::erase_if(drbs_, [&](const auto& kv) { return !live.has_drb(kv.first); });
  std::uniform_real_distribution<double> jitter(1.0 - jitter_, 1.0 + jitter_);
  for (const auto& [id, _] : live.bearers()) {
    double bits = traffic_.rate_at(id, now) * 1e3 * config_.tti_ms;
    if (jitter_ > 0.0) bits *= jitter(rng_);
    drbs_[id].buffer_bits += bits;
  }

  auto effective_bits = [&](UeId ue) {
    const auto& u = live.ue(ue);
    return per_rb_bits() * mcs_efficiency(u.mcs) * (1.0 - std::clamp(u.bler, 0.0, 1.0));
  };

  fssf::TtiInput in;
  in.tti_index = tti_;
  in.total_rb = config_.total_rb;
  in.history = std::move(history_);
  for (const auto& [id, ue] : live.ues()) {
    if (!ue.bearers.empty()) in.schedulable_ues.push_back({id, per_rb_bits() * mcs_efficiency(ue.mcs)});
  }
  for (const auto& [sid, s] : live.slices()) {
    if (s.state == fs::SliceState::Idle) continue;
    fssf::SliceInput si{sid, s.state, s.rrc, s.fd_scheduler, {}};
    for (auto drb : s.bearers) {
      const auto& b = live.bearer(drb);
      const double eff = effective_bits(b.ue_id);
      const double buffered = drbs_[drb].buffer_bits;
      int demand = 0;
      if (eff > 0.0 && buffered > 0.0) {
        demand = static_cast<int>(std::min<double>(config_.total_rb, std::ceil(buffered / eff - 1e-9)));
      }
      si.drbs.push_back({drb, b.ue_id, b.bearer_priority, demand});
    }
    in.slices.push_back(std::move(si));
  }

  auto decision = fssf::run_tti(in, scheduler_);
  history_ = std::move(decision.next_history);

  TtiMetrics m;
  m.tti_index = tti_;
  m.allocated_rb = decision.allocated_rb();
  m.per_slice_rb = decision.per_slice_rb;

  Sample sample;
  sample.allocated_rb = m.allocated_rb;
  sample.slice_rb = decision.per_slice_rb;
  for (const auto& [id, b] : live.bearers()) {
    auto& d = drbs_[id];
    const auto it = decision.plan.per_drb_rb.find(id);
    const int alloc = it == decision.plan.per_drb_rb.end() ? 0 : it->second;
    const double served = std::min(alloc * effective_bits(b.ue_id), d.buffer_bits);
    d.buffer_bits -= served;
    d.served.push_back(served);
    d.served_sum += served;
    if (d.served.size() > static_cast<std::size_t>(config_.window_ttis)) {
      d.served_sum -= d.served.front();
      d.served.pop_front();
    }
    const double rtt = rtt_ms(id);
    live.record_bearer_sample(id, {served / (config_.tti_ms * 1e3), rtt, 0.0, d.buffer_bits / 8.0},
                              config_.tti_ms);
    sample.ue_rb[b.ue_id] += alloc;
    sample.ue_bits[b.ue_id] += served;
    sample.slice_bits[b.slice_id] += served;
    m.drbs.push_back({id, b.ue_id, b.slice_id, alloc, served, d.buffer_bits, rtt});
  }
  window_.push_back(std::move(sample));
  if (window_.size() > static_cast<std::size_t>(config_.window_ttis)) window_.pop_front();
  ++tti_;
  return m;
}

void Cell::run_for_ms(std::uint64_t ms) {
  const auto end = now_ms() + ms;
  while (now_ms() < end) step_tti();
}

double Cell::rtt_ms(DrbId drb) const {
  auto it = drbs_.find(drb);
  if (it == drbs_.end() || it->second.buffer_bits <= 0.0) return config_.base_rtt_ms;
  const double rate = served_rate_bps(it->second);
  if (rate <= 0.0) return config_.rtt_cap_ms;
  return std::min(config_.rtt_cap_ms, config_.base_rtt_ms + it->second.buffer_bits / rate * 1e3);
}

double Cell::buffer_bits(DrbId drb) const {
  auto it = drbs_.find(drb);
  return it == drbs_.end() ? 0.0 : it->second.buffer_bits;
}

double Cell::utilization() const {
  if (window_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : window_) sum += s.allocated_rb;
  return sum / (static_cast<double>(window_.size()) * config_.total_rb);
}

WindowStats Cell::window() const {
  WindowStats w;
  if (window_.empty()) return w;
  const double n = static_cast<double>(window_.size());
  const double to_mbps = 1.0 / (n * config_.tti_ms * 1e3);
  for (const auto& s : window_) {
    w.utilization += s.allocated_rb;
    for (const auto& [id, rb] : s.slice_rb) w.slice_rb[id] += rb;
    for (const auto& [id, rb] : s.ue_rb) w.ue_rb[id] += rb;
    for (const auto& [id, bits] : s.slice_bits) w.slice_mbps[id] += bits;
    for (const auto& [id, bits] : s.ue_bits) w.ue_mbps[id] += bits;
  }
  w.utilization /= n * config_.total_rb;
  for (auto& [_, v] : w.slice_rb) v /= n;
  for (auto& [_, v] : w.ue_rb) v /= n;
  for (auto& [_, v] : w.slice_mbps) v *= to_mbps;
  for (auto& [_, v] : w.ue_mbps) v *= to_mbps;
  return w;
}

}  // namespace hexsim::radio
