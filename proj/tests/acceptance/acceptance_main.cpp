// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.
//
// usage: hexsim_acceptance <scenario-dir>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "frame_gen.hpp"
#include "fssf_oracle.hpp"
#include "hexsim/composition_sim.hpp"
#include "hexsim/e2lite.hpp"
#include "hexsim/error.hpp"
#include "hexsim/fs_plugin.hpp"
#include "hexsim/fssf.hpp"
#include "hexsim/pml.hpp"
#include "hexsim/ric_harness.hpp"
#include "hexsim/scenario.hpp"
#include "hexsim/slice_model.hpp"
#include "state_machine_oracle.hpp"

namespace {

namespace fsys = std::filesystem;
using namespace std::chrono_literals;
using hexsim::Errc;
using hexsim::Error;
using hexsim::ric::PhaseStats;

struct Check {
  bool pass = true;
  std::ostringstream detail;

  // Records one condition; the detail keeps every observed value.
  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [x]");
  }
};

std::string num(double v, int decimals = 1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

bool within(double v, double target, double tol) { return std::fabs(v - target) <= tol; }

bool within_rel(double v, double target, double frac) { return std::fabs(v - target) <= frac * target; }

struct Replay {
  hexsim::scenario::Scenario script;
  std::vector<PhaseStats> phases;
};

Replay replay(const fsys::path& dir, const std::string& file) {
  Replay r;
  r.script = hexsim::scenario::load_scenario((dir / file).string());
  const auto result = hexsim::ric::run_scenario(r.script);
  r.phases = hexsim::ric::summarize_phases(r.script, result);
  return r;
}

// ---- 1-3: scenario replays ------------------------------------------------

Check fig15(const fsys::path& dir) {
  Check c;
  const auto r = replay(dir, "fig15.json");
  if (r.phases.size() != 4) {
    c.expect(false, "expected 4 phases, got " + std::to_string(r.phases.size()));
    return c;
  }
  const auto& p = r.phases;
  const double s1 = p[0].slice_mbps.at("1");
  const double s2 = p[0].slice_mbps.at("2");
  c.expect(within(s1, 65, 5) && within(s2, 65, 5), "p1 S1 " + num(s1) + " S2 " + num(s2) + " (65+-5)");
  const double p2s2 = p[1].slice_mbps.at("2");
  const double p2s1 = p[1].slice_mbps.at("1");
  c.expect(within(p2s2, 103, 3), "p2 S2 " + num(p2s2) + " (103+-3)");
  c.expect(within(p2s1, 27, 3), "p2 S1 " + num(p2s1) + " (27+-3)");
  const double p3s1 = p[2].slice_mbps.at("1");
  c.expect(within(p3s1, 27, 3), "p3 S1 " + num(p3s1) + " (27+-3)");
  c.expect(within(p[2].utilization, 0.20, 0.03), "p3 util " + num(p[2].utilization, 3) + " (0.20+-0.03)");
  const double base_rtt = p[0].slice_rtt_ms.at("1");
  const double p3_rtt = p[2].slice_rtt_ms.at("1");
  c.expect(p3_rtt > 5 * base_rtt, "p3 S1 rtt " + num(p3_rtt, 0) + " ms vs base " + num(base_rtt, 0) + " (>5x)");
  const double p4s1 = p[3].slice_mbps.at("1");
  c.expect(within(p4s1, 130, 3), "p4 S1 " + num(p4s1) + " (130+-3)");
  return c;
}

Check fig16(const fsys::path& dir) {
  Check c;
  const auto r = replay(dir, "fig16.json");
  if (r.phases.size() != 4) {
    c.expect(false, "expected 4 phases, got " + std::to_string(r.phases.size()));
    return c;
  }
  const auto& p = r.phases;
  const double a = p[0].slice_mbps.at("1");
  const double b = p[0].slice_mbps.at("2");
  const double d = p[0].slice_mbps.at("3");
  c.expect(within_rel(a, 52, 0.05) && within_rel(b, 52, 0.05) && within_rel(d, 26, 0.05),
           "p1 " + num(a) + "/" + num(b) + "/" + num(d) + " (52/52/26 +-5%)");
  const double s3 = p[1].slice_mbps.at("3");
  c.expect(within(s3, 78, 3), "p2 S3 " + num(s3) + " (78+-3)");

  const auto& last = p.back();
  const double s2 = last.slice_mbps.at("2");
  const double s2_rtt = last.slice_rtt_ms.at("2");
  const double s2_base = p[0].slice_rtt_ms.at("2");
  c.expect(s2 < 0.95 * 52, "final S2 " + num(s2) + " (misses 52)");
  c.expect(s2_rtt > 5 * s2_base, "final S2 rtt " + num(s2_rtt, 0) + " ms vs base " + num(s2_base, 0) + " (>5x)");
  // Targets of the isolated slices are their offered loads in the final phase.
  const double t1 = r.script.ue(hexsim::UeId(1)).offered_mbps;
  const double t3 = r.script.ue(hexsim::UeId(3)).offered_mbps;
  double target1 = t1;
  double target3 = t3;
  for (const auto& e : r.script.events) {
    if (e.action != hexsim::scenario::Action::TrafficChange) continue;
    for (auto ue : hexsim::scenario::event_ues(e)) {
      if (ue.value == 1) target1 = hexsim::scenario::event_rate(e);
      if (ue.value == 3) target3 = hexsim::scenario::event_rate(e);
    }
  }
  const double f1 = last.slice_mbps.at("1");
  const double f3 = last.slice_mbps.at("3");
  c.expect(within_rel(f1, target1, 0.05), "final S1 " + num(f1) + " (" + num(target1) + "+-5%)");
  c.expect(within_rel(f3, target3, 0.05), "final S3 " + num(f3) + " (" + num(target3) + "+-5%)");
  return c;
}

Check fig17(const fsys::path& dir) {
  Check c;
  const auto r = replay(dir, "fig17.json");
  if (r.phases.size() != 3) {
    c.expect(false, "expected 3 phases, got " + std::to_string(r.phases.size()));
    return c;
  }
  const auto& eq = r.phases.front();
  const double rb1 = eq.ue_rb.at("1");
  const double rb2 = eq.ue_rb.at("2");
  c.expect(within(rb1 / (rb1 + rb2), 0.5, 0.02), "BP{1,1} RBs " + num(rb1) + "/" + num(rb2) + " (equal)");
  const auto& bp5 = r.phases.back();
  const double ue1 = bp5.ue_mbps.at("1");
  const double r1 = bp5.ue_rb.at("1");
  const double r2 = bp5.ue_rb.at("2");
  const double share = r1 / (r1 + r2);
  c.expect(ue1 >= 78 && ue1 <= 88, "BP{1,5} UE1 " + num(ue1) + " Mbps ([78,88])");
  c.expect(within(share, 0.80, 0.05), "BP{1,5} RBs " + num(r1) + "/" + num(r2) + " share " + num(share, 3) +
                                          " (0.80+-0.05)");
  return c;
}

// ---- 4-5: agent benchmarks ------------------------------------------------

hexsim::ric::json read_json(const fsys::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::InvalidInput, "cannot open " + p.string());
  return hexsim::ric::json::parse(in);
}

Check delay(const fsys::path& dir) {
  using hexsim::agent::ExecutionMode;
  Check c;
  const auto cfg = hexsim::ric::parse_delay_config(read_json(dir / "bench_delay.json"));
  const auto median_at = [](const std::vector<hexsim::ric::DelayStats>& s, int n) {
    for (const auto& d : s) {
      if (d.instances == n) return d.median_us;
    }
    return 0.0;
  };
  const auto dec = hexsim::ric::benchmark_delay(cfg, ExecutionMode::Decoupled);
  const double m10 = median_at(dec, 10);
  const double m100 = median_at(dec, 100);
  c.expect(m10 > 0 && m100 <= 3 * m10,
           "decoupled median N=10 " + num(m10) + " us, N=100 " + num(m100) + " us, ratio " +
               num(m10 > 0 ? m100 / m10 : 0.0, 2) + " (<=3)");

  const auto ser = hexsim::ric::benchmark_delay(cfg, ExecutionMode::Serialized);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& d : ser) {
    xs.push_back(d.instances);
    ys.push_back(d.median_us);
  }
  const auto fit = hexsim::ric::fit_line(xs, ys);
  c.expect(fit.slope > 0 && fit.r2 > 0.8,
           "serialized slope " + num(fit.slope) + " us/instance, r2 " + num(fit.r2, 3) + " (>0, >0.8)");
  return c;
}

Check reliability(const fsys::path& dir) {
  using hexsim::agent::ExecutionMode;
  Check c;
  const auto cfg = hexsim::ric::parse_reliability_config(read_json(dir / "bench_reliability.json"));
  c.expect(cfg.duration_s == 60, "run length " + std::to_string(cfg.duration_s) + " s (60)");
  double worst = 1.0;
  for (const auto& s : hexsim::ric::benchmark_reliability(cfg, ExecutionMode::Decoupled)) {
    worst = std::min(worst, s.ratio);
  }
  c.expect(worst == 1.0, "decoupled min ratio " + num(worst, 3) + " (1.00)");
  hexsim::ric::ReliabilityConfig gated = cfg;
  gated.rates = {100};
  const auto g = hexsim::ric::benchmark_reliability(gated, ExecutionMode::FrameGated).front();
  c.expect(g.ratio >= 0.05 && g.ratio <= 0.15, "frame-gated at 100/s " + num(g.ratio, 3) + " ([0.05,0.15])");
  return c;
}

// ---- 6: HU composition scaling --------------------------------------------

Check scaling() {
  namespace comp = hexsim::composition;
  Check c;
  comp::ScalingConfig cfg;
  cfg.mode = comp::Mode::HexRan;
  const auto hex = comp::run_scaling_experiment(cfg);
  cfg.mode = comp::Mode::Baseline;
  const auto base = comp::run_scaling_experiment(cfg);

  const auto& h = hex.final_step();
  c.expect(h.cells == 10 && within(h.delivered_mbps, 1000, 1) && h.loss == 0.0,
           "hexran 10 cells " + num(h.delivered_mbps) + " Mbps loss " + num(h.loss, 3) + " (1000+-1, 0)");
  c.expect(hex.peak_utilization <= 0.90, "hexran peak util " + num(hex.peak_utilization, 3) + " (<=0.90)");
  const auto& b = base.final_step();
  c.expect(within(b.delivered_mbps, 450, 1), "baseline " + num(b.delivered_mbps) + " Mbps (450+-1)");
  c.expect(within(base.peak_utilization, 2.2, 0.1), "baseline peak util " + num(base.peak_utilization, 3) +
                                                        " (2.2+-0.1)");
  bool same = true;
  for (std::size_t i = 0; i < hex.steps.size() && i < base.steps.size(); ++i) {
    if (hex.steps[i].cells > 4) break;
    same = same && hex.steps[i].delivered_mbps == base.steps[i].delivered_mbps &&
           hex.steps[i].loss == base.steps[i].loss;
  }
  c.expect(same, "modes identical at <=4 cells");
  return c;
}

// ---- 7-8: oracles -----------------------------------------------------------

Check oracle_equivalence() {
  Check c;
  const auto r = hexsim::oracle::check_equivalence(20240601, 10000);
  c.expect(r.instances == 10000 && r.mismatches == 0,
           std::to_string(r.instances - r.mismatches) + "/" + std::to_string(r.instances) + " exact" +
               (r.mismatches > 0 ? ", first: " + r.first_mismatch : ""));
  return c;
}

Check state_machine() {
  namespace fs = hexsim::fs;
  using fs::SliceState;
  Check c;
  const auto r = hexsim::oracle::run_state_machine_suite();
  c.expect(r.cases > 0 && r.mismatches == 0,
           std::to_string(r.cases - r.mismatches) + "/" + std::to_string(r.cases) + " cases");

  const auto cycle = [](SliceState def, fs::RadioResourceConfig rrc) {
    fs::FsContext ctx(106);
    ctx.create_slice({hexsim::SliceId(1), def, rrc, "priority_weighted", {}});
    fs::Bearer b;
    b.drb_id = hexsim::DrbId(1);
    b.ue_id = hexsim::UeId(1);
    ctx.add_drb(hexsim::SliceId(1), b);
    return ctx.remove_drb(hexsim::SliceId(1), hexsim::DrbId(1));
  };
  const auto hybrid = cycle(SliceState::Hybrid, {10, 20, 2});
  c.expect(hybrid.state == SliceState::Dedicated && hybrid.rrc.prioritized_rb == 0 && hybrid.rrc.dedicated_rb == 10,
           "Hybrid last DRB -> " + std::string(fs::to_string(hybrid.state)));
  for (auto s : {SliceState::Prioritized, SliceState::Shared}) {
    const auto after = cycle(s, hexsim::oracle::canonical_rrc(s));
    c.expect(after.state == SliceState::Idle && after.default_active_state == SliceState::Shared,
             std::string(fs::to_string(s)) + " last DRB -> " + std::string(fs::to_string(after.state)) +
                 " default " + std::string(fs::to_string(after.default_active_state)));
  }
  return c;
}

// ---- 9: PML -----------------------------------------------------------------

Check pml_suite() {
  namespace pml = hexsim::pml;
  namespace fs = hexsim::fs;
  Check c;

  {
    pml::Pml p;
    std::mutex mu;
    std::map<std::string, std::vector<std::pair<int, int>>> log;
    std::map<std::string, std::vector<std::chrono::nanoseconds>> arrivals;
    std::atomic<int> overlaps{0};
    std::map<std::string, std::atomic<int>> running;
    pml::PluginManifest m;
    m.plugin_id = "p";
    for (const std::string api : {"a", "b", "c"}) {
      running[api] = 0;
      m.apis.push_back({api,
                        [&, api](const pml::ApiCall& call) -> std::any {
                          if (running[api].fetch_add(1) != 0) ++overlaps;
                          {
                            std::lock_guard lock(mu);
                            log[api].push_back(std::any_cast<std::pair<int, int>>(call.payload));
                            arrivals[api].push_back(call.arrival_time);
                          }
                          running[api].fetch_sub(1);
                          return {};
                        },
                        false, {}, {}});
    }
    p.register_plugin(std::move(m));
    constexpr int kCallers = 4;
    constexpr int kPerCaller = 2500;
    std::vector<std::thread> threads;
    for (int t = 0; t < kCallers; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < kPerCaller; ++i) {
          pml::ApiCall call;
          call.api_id = std::string(1, static_cast<char>('a' + (i * 7 + t) % 3));
          call.caller_id = "caller-" + std::to_string(t);
          call.payload = std::make_pair(t, i);
          p.invoke(std::move(call), nullptr);
        }
      });
    }
    for (auto& th : threads) th.join();
    p.drain();
    std::size_t total = 0;
    bool ordered = true;
    for (const auto& [api, entries] : log) {
      total += entries.size();
      std::map<int, int> last;
      for (const auto& [caller, seq] : entries) {
        auto it = last.find(caller);
        if (it != last.end() && it->second >= seq) ordered = false;
        last[caller] = seq;
      }
      ordered = ordered && std::is_sorted(arrivals[api].begin(), arrivals[api].end());
    }
    c.expect(total == kCallers * kPerCaller && ordered && overlaps == 0,
             "FIFO " + std::to_string(total) + " calls" + (ordered ? " in order" : " out of order") +
                 (overlaps > 0 ? ", overlapping" : ""));
  }

  {
    const auto t0 = std::chrono::nanoseconds(std::chrono::seconds(10));
    struct Case {
      bool same_caller;
      std::chrono::nanoseconds gap;
      bool accepted;
    };
    const Case cases[] = {{true, 10ms, true},   {false, 10ms, false}, {true, 100ms, true},
                          {false, 100ms, true}, {false, 99ms, false}, {false, 150ms, true},
                          {true, 0ms, true},    {false, 0ms, false}};
    int right = 0;
    for (const auto& k : cases) {
      pml::Pml p(100ms);
      pml::PluginManifest m;
      m.plugin_id = "p";
      m.apis.push_back({"w", [](const pml::ApiCall&) -> std::any { return {}; }, true, {}, {}});
      p.register_plugin(std::move(m));
      const auto call = [](const std::string& caller, std::chrono::nanoseconds at) {
        pml::ApiCall x;
        x.api_id = "w";
        x.caller_id = caller;
        x.arrival_time = at;
        x.parameter_paths = {"slice/2/rrc"};
        return x;
      };
      const bool first = p.invoke(call("X", t0)).get().ok();
      const auto second = p.invoke(call(k.same_caller ? "X" : "Y", t0 + k.gap)).get();
      const bool ok = first && second.ok() == k.accepted && (k.accepted || second.error == Errc::LockedOut);
      if (ok) ++right;
    }
    c.expect(right == static_cast<int>(std::size(cases)),
             "lockout matrix " + std::to_string(right) + "/" + std::to_string(std::size(cases)));
  }

  {
    fs::FsContext ctx(106);
    for (int s = 1; s <= 2; ++s) {
      ctx.create_slice({hexsim::SliceId(s), fs::SliceState::Shared, {}, "priority_weighted", {}});
      fs::Bearer b;
      b.drb_id = hexsim::DrbId(s);
      b.ue_id = hexsim::UeId(s);
      ctx.add_drb(hexsim::SliceId(s), b);
    }
    fs::FsStore store(std::move(ctx));
    fs::FsPlugin plugin(store);
    std::atomic<bool> done{false};
    std::thread writer([&] {
      for (int i = 0; i < 2000; ++i) {
        fs::SliceUpdate a;
        a.slice_id = hexsim::SliceId(1);
        a.shared_priority = 1 + i % 50;
        fs::SliceUpdate b = a;
        b.slice_id = hexsim::SliceId(2);
        plugin.control({{a, b}, {}}, "x");
      }
      done = true;
    });
    int observed = 0;
    int torn = 0;
    while (!done) {
      store.on_tti_boundary();
      const auto snap = store.published();
      ++observed;
      if (snap->slice(hexsim::SliceId(1)).rrc.shared_priority != snap->slice(hexsim::SliceId(2)).rrc.shared_priority) {
        ++torn;
      }
    }
    writer.join();
    c.expect(observed > 0 && torn == 0,
             "publication " + std::to_string(torn) + " torn of " + std::to_string(observed) + " snapshots");
  }
  return c;
}

// ---- 10: protocol -------------------------------------------------------------

Check protocol_suite() {
  namespace e2 = hexsim::e2lite;
  Check c;
  std::mt19937_64 rng(20240502);
  int round_trips = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto f = hexsim::testsupport::random_frame(rng);
    if (e2::decode(e2::encode(f)) == f) ++round_trips;
  }
  c.expect(round_trips == 10000, "round trip " + std::to_string(round_trips) + "/10000");

  int crashes = 0;
  int inputs = 0;
  const auto feed = [&](const e2::Bytes& b) {
    ++inputs;
    try {
      e2::decode(b);
    } catch (const Error&) {
    } catch (...) {
      ++crashes;
    }
  };
  for (int i = 0; i < 10000; ++i) {
    e2::Bytes b(std::uniform_int_distribution<std::size_t>(0, 64)(rng));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    if (i % 2 == 0 && b.size() >= e2::kHeaderSize) {
      b[0] = e2::kMagic0;
      b[1] = e2::kMagic1;
      b[2] = e2::kVersion;
      const auto len = static_cast<std::uint32_t>(b.size() - e2::kHeaderSize);
      b[8] = 0;
      b[9] = 0;
      b[10] = static_cast<std::uint8_t>(len >> 8);
      b[11] = static_cast<std::uint8_t>(len);
    }
    feed(b);
  }
  for (int i = 0; i < 10000; ++i) {
    auto b = e2::encode(hexsim::testsupport::random_frame(rng));
    const auto pos = std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng);
    b[pos] ^= static_cast<std::uint8_t>(1u << std::uniform_int_distribution<int>(0, 7)(rng));
    feed(b);
  }
  c.expect(crashes == 0, "fuzz " + std::to_string(inputs) + " inputs, " + std::to_string(crashes) +
                             " non-protocol exceptions");
  return c;
}

// ---- scheduler budget -----------------------------------------------------

Check tti_budget() {
  namespace fssf = hexsim::fssf;
  namespace fs = hexsim::fs;
  Check c;
  fssf::TtiInput in;
  in.total_rb = 106;
  std::mt19937_64 rng(106);
  std::uniform_int_distribution<int> demand(0, 40);
  for (int u = 1; u <= 12; ++u) in.schedulable_ues.push_back({hexsim::UeId(u), 1226.0});
  const std::pair<fs::SliceState, fs::RadioResourceConfig> slices[] = {
      {fs::SliceState::Dedicated, {30, 0, 1}},
      {fs::SliceState::Prioritized, {0, 30, 2}},
      {fs::SliceState::Shared, {0, 0, 1}}};
  const char* algorithms[] = {"priority_weighted", "proportional_fair", "round_robin"};
  int ue = 1;
  for (int s = 0; s < 3; ++s) {
    fssf::SliceInput si{hexsim::SliceId(s + 1), slices[s].first, slices[s].second, algorithms[s], {}};
    for (int d = 0; d < 4; ++d, ++ue) {
      si.drbs.push_back({hexsim::DrbId(ue), hexsim::UeId(ue), 1 + d % 3, demand(rng)});
    }
    in.slices.push_back(si);
  }
  constexpr int kRuns = 5000;
  std::vector<double> us;
  us.reserve(kRuns);
  for (int i = 0; i < kRuns; ++i) {
    in.tti_index = static_cast<std::uint64_t>(i);
    for (auto& s : in.slices) {
      for (auto& d : s.drbs) d.demand_rb = demand(rng);
    }
    const auto start = std::chrono::steady_clock::now();
    auto decision = fssf::run_tti(in);
    const auto end = std::chrono::steady_clock::now();
    in.history = std::move(decision.next_history);
    us.push_back(std::chrono::duration<double, std::micro>(end - start).count());
  }
  std::nth_element(us.begin(), us.begin() + kRuns / 2, us.end());
  const double median = us[kRuns / 2];
  c.expect(median < 100.0, "run_tti 106 RBs/12 UEs median " + num(median, 2) + " us (<100)");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: hexsim_acceptance <scenario-dir>\n";
    return 2;
  }
  const fsys::path dir = argv[1];
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"1 fig15 replay", [&] { return fig15(dir); }},
      {"2 fig16 replay", [&] { return fig16(dir); }},
      {"3 fig17 replay", [&] { return fig17(dir); }},
      {"4 delay flatness", [&] { return delay(dir); }},
      {"5 reliability", [&] { return reliability(dir); }},
      {"6 HU scaling", scaling},
      {"7 scheduler oracle", oracle_equivalence},
      {"8 state machine", state_machine},
      {"9 PML suite", pml_suite},
      {"10 protocol suite", protocol_suite},
      {"11 run_tti budget", tti_budget},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    if (!c.pass) ++failed;
    std::cout << (c.pass ? "PASS " : "FAIL ") << name << ": " << c.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
