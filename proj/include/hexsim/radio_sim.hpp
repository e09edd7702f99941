#pragma once

// TTI-driven single-cell emulation: offered traffic feeds per-DRB buffers,
// the FSSF allocates RBs, and served bits drain the buffers.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "hexsim/fs_plugin.hpp"
#include "hexsim/fssf.hpp"

namespace hexsim::radio {

struct CellConfig {
  int total_rb = 106;
  double per_rb_rate_mbps = 130.0 / 106.0;  // at max MCS
  double tti_ms = 1.0;
  double base_rtt_ms = 20.0;
  double rtt_cap_ms = 2000.0;
  int window_ttis = 1000;  // utilization and rate window
};

// Throws Error(InvalidInput) unless total_rb, per_rb_rate_mbps and tti_ms are positive.
void validate(const CellConfig& config);

struct LinkState {
  int mcs = 28;
  int cqi = 15;
  double bler = 0.0;
};

// Piecewise-constant offered rate per DRB.
class TrafficProfile {
 public:
  // Rate from `t_ms` onwards until the next change. Throws Error(InvalidInput) for negative rates.
  void set_rate(DrbId drb, std::uint64_t t_ms, double mbps);
  double rate_at(DrbId drb, std::uint64_t t_ms) const;

 private:
  std::map<DrbId, std::map<std::uint64_t, double>> steps_;
};

struct DrbTti {
  DrbId drb_id;
  UeId ue_id;
  SliceId slice_id;
  int alloc_rb = 0;
  double served_bits = 0.0;
  double buffer_bits = 0.0;
  double rtt_ms = 0.0;
};

struct TtiMetrics {
  std::uint64_t tti_index = 0;
  int allocated_rb = 0;
  std::map<SliceId, int> per_slice_rb;
  std::vector<DrbTti> drbs;
};

// Averages over the trailing window.
struct WindowStats {
  double utilization = 0.0;
  std::map<SliceId, double> slice_rb;
  std::map<UeId, double> ue_rb;
  std::map<SliceId, double> slice_mbps;
  std::map<UeId, double> ue_mbps;
};

class Cell {
 public:
  using TtiHook = std::function<void(std::uint64_t tti_index, std::uint64_t now_ms)>;

  // With a plugin, each TTI starts with plugin->on_tti (boundary publication
  // and periodic telemetry); otherwise with store.on_tti_boundary().
  Cell(CellConfig config, fs::FsStore& store, fs::FsPlugin* plugin = nullptr,
       fssf::SchedulerConfig scheduler = {}, std::uint64_t seed = 1);

  // Runs after the boundary publication, before scheduling (e.g. the agent's frame gate).
  void add_tti_hook(TtiHook hook) { hooks_.push_back(std::move(hook)); }

  TrafficProfile& traffic() { return traffic_; }
  // Uniform multiplicative arrival jitter in [1-j, 1+j], drawn from the seeded RNG.
  void set_arrival_jitter(double j) { jitter_ = j; }
  void set_link_state(UeId ue, const LinkState& link);

  TtiMetrics step_tti();
  void run_for_ms(std::uint64_t ms);

  std::uint64_t tti_index() const { return tti_; }
  std::uint64_t now_ms() const;

  double rtt_ms(DrbId drb) const;
  double buffer_bits(DrbId drb) const;
  double utilization() const;
  WindowStats window() const;
  const CellConfig& config() const { return config_; }
  double per_rb_bits() const { return config_.per_rb_rate_mbps * 1e3 * config_.tti_ms; }

 private:
  struct DrbState {
    double buffer_bits = 0.0;
    std::deque<double> served;  // bits per TTI over the window
    double served_sum = 0.0;
  };
  struct Sample {
    int allocated_rb = 0;
    std::map<SliceId, int> slice_rb;
    std::map<UeId, int> ue_rb;
    std::map<SliceId, double> slice_bits;
    std::map<UeId, double> ue_bits;
  };

  double served_rate_bps(const DrbState& d) const;

  CellConfig config_;
  fs::FsStore& store_;
  fs::FsPlugin* plugin_;
  fssf::SchedulerConfig scheduler_;
  fssf::SchedulerHistory history_;
  TrafficProfile traffic_;
  std::vector<TtiHook> hooks_;
  std::map<UeId, LinkState> links_;
  std::map<DrbId, DrbState> drbs_;
  std::deque<Sample> window_;
  std::mt19937_64 rng_;
  double jitter_ = 0.0;
  std::uint64_t tti_ = 0;
};

}  // namespace hexsim::radio
