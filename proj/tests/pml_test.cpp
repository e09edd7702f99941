#include "hexsim/pml.hpp"

#include <gtest/gtest.h>
#include <time.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "hexsim/fs_plugin.hpp"
#include "hexsim/fssf.hpp"

namespace hexsim::pml {
namespace {

using namespace std::chrono_literals;

PluginManifest echo_plugin(const std::string& id, std::vector<std::string> apis, bool writes = false) {
  PluginManifest m;
  m.plugin_id = id;
  for (auto& a : apis) {
    m.apis.push_back({a, [](const ApiCall& c) -> std::any { return c.payload; }, writes, {}, {}});
  }
  return m;
}

ApiCall write_call(const std::string& caller, nanoseconds at, const std::string& path = "slice/2/rrc") {
  ApiCall c;
  c.api_id = "w";
  c.caller_id = caller;
  c.arrival_time = at;
  c.parameter_paths = {path};
  return c;
}

TEST(PmlTest, RegisterPlugins) {
  Pml pml;
  fs::FsStore store(fs::FsContext(106));
  fs::FsPlugin plugin(store);
  pml.register_plugin(plugin.manifest());
  EXPECT_EQ(pml.api_ids().size(), 5u);
  EXPECT_TRUE(pml.has_plugin("fs"));

  pml.register_plugin(PluginManifest{"empty", {}, {}});
  EXPECT_EQ(pml.api_ids().size(), 5u);

  try {
    pml.register_plugin(echo_plugin("other", {fs::kApiControl}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateApi);
  }
  EXPECT_FALSE(pml.has_plugin("other"));
}

TEST(PmlTest, UnknownApiFailsFast) {
  Pml pml;
  ApiCall c;
  c.api_id = "missing";
  const auto r = pml.invoke(c).get();
  EXPECT_EQ(r.error, Errc::UnknownApi);
}

TEST(PmlTest, PerApiFifoUnderConcurrentCallers) {
  Pml pml;
  std::mutex log_mu;
  std::map<std::string, std::vector<std::pair<int, int>>> log;  // api -> (caller, seq)
  std::map<std::string, std::atomic<int>> running;
  PluginManifest m;
  m.plugin_id = "p";
  for (const std::string api : {"a", "b", "c"}) {
    running[api] = 0;
    m.apis.push_back({api,
                      [&, api](const ApiCall& c) -> std::any {
                        EXPECT_EQ(running[api].fetch_add(1), 0) << "overlapping execution on " << api;
                        {
                          std::lock_guard lock(log_mu);
                          log[api].push_back(std::any_cast<std::pair<int, int>>(c.payload));
                        }
                        running[api].fetch_sub(1);
                        return {};
                      },
                      false, {}, {}});
  }
  pml.register_plugin(std::move(m));

  std::mutex arrival_mu;
  std::map<std::string, std::vector<nanoseconds>> completion_arrivals;
  constexpr int kCallers = 4;
  constexpr int kPerCaller = 2500;
  std::vector<std::thread> threads;
  for (int t = 0; t < kCallers; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kPerCaller; ++i) {
        ApiCall c;
        c.api_id = std::string(1, static_cast<char>('a' + (i * 7 + t) % 3));
        c.caller_id = "caller-" + std::to_string(t);
        c.payload = std::make_pair(t, i);
        pml.invoke(c, [&](const ApiCall& call, const ApiResult& r) {
          EXPECT_TRUE(r.ok());
          std::lock_guard lock(arrival_mu);
          completion_arrivals[call.api_id].push_back(call.arrival_time);
        });
      }
    });
  }
  for (auto& th : threads) th.join();
  pml.drain();

  std::size_t total = 0;
  for (const auto& [api, entries] : log) {
    total += entries.size();
    std::map<int, int> last;
    for (const auto& [caller, seq] : entries) {
      auto it = last.find(caller);
      if (it != last.end()) {
        EXPECT_LT(it->second, seq);
      }
      last[caller] = seq;
    }
    const auto& arrivals = completion_arrivals[api];
    EXPECT_TRUE(std::is_sorted(arrivals.begin(), arrivals.end())) << api;
  }
  EXPECT_EQ(total, static_cast<std::size_t>(kCallers * kPerCaller));
}

TEST(PmlTest, LockoutMatrix) {
  const auto t0 = nanoseconds(std::chrono::seconds(10));
  struct Case {
    bool same_caller;
    nanoseconds gap;
    bool accepted;
  };
  const Case cases[] = {{true, 10ms, true},    {false, 10ms, false}, {true, 100ms, true},
                        {false, 100ms, true},  {false, 99ms, false}, {false, 150ms, true},
                        {true, 0ms, true},     {false, 0ms, false}};
  for (const auto& c : cases) {
    Pml pml(100ms);
    pml.register_plugin(echo_plugin("p", {"w"}, true));
    ASSERT_TRUE(pml.invoke(write_call("X", t0)).get().ok());
    const auto r = pml.invoke(write_call(c.same_caller ? "X" : "Y", t0 + c.gap)).get();
    EXPECT_EQ(r.ok(), c.accepted) << "same=" << c.same_caller << " gap=" << c.gap.count();
    if (!c.accepted) {
      EXPECT_EQ(r.error, Errc::LockedOut);
    }
  }
}

TEST(PmlTest, LockoutIsPerPathAndWritesOnly) {
  Pml pml(100ms);
  pml.register_plugin(echo_plugin("p", {"w"}, true));
  pml.register_plugin(echo_plugin("q", {"r"}, false));
  const auto t0 = nanoseconds(std::chrono::seconds(1));
  ASSERT_TRUE(pml.invoke(write_call("X", t0, "slice/2/rrc")).get().ok());
  EXPECT_TRUE(pml.invoke(write_call("Y", t0 + 1ms, "slice/3/rrc")).get().ok());
  ApiCall read;
  read.api_id = "r";
  read.caller_id = "Y";
  read.arrival_time = t0 + 2ms;
  read.parameter_paths = {"slice/2/rrc"};
  EXPECT_TRUE(pml.invoke(read).get().ok());
}

TEST(PmlTest, FailedWriteDoesNotLock) {
  Pml pml(100ms);
  PluginManifest m;
  m.plugin_id = "p";
  m.apis.push_back({"w",
                    [](const ApiCall& c) -> std::any {
                      if (c.caller_id == "X") throw Error(Errc::ValidationFailed, "bad");
                      return {};
                    },
                    true, {}, {}});
  pml.register_plugin(std::move(m));
  const auto t0 = nanoseconds(std::chrono::seconds(1));
  EXPECT_EQ(pml.invoke(write_call("X", t0)).get().error, Errc::ValidationFailed);
  EXPECT_TRUE(pml.invoke(write_call("Y", t0 + 1ms)).get().ok());
}

TEST(PmlTest, AdminPluginChangesWindow) {
  Pml pml(100ms);
  pml.register_plugin(echo_plugin("p", {"w"}, true));
  pml.register_plugin(fs::admin_manifest(pml));
  ApiCall cfg;
  cfg.api_id = fs::kApiPmlConfig;
  cfg.caller_id = "smo";
  cfg.payload = fs::json{{"lockout_window_ms", 50}};
  ASSERT_TRUE(pml.invoke(cfg).get().ok());
  EXPECT_EQ(pml.lockout().window(), 50ms);

  const auto t0 = nanoseconds(std::chrono::seconds(5));
  ASSERT_TRUE(pml.invoke(write_call("X", t0)).get().ok());
  EXPECT_TRUE(pml.invoke(write_call("Y", t0 + 60ms)).get().ok());
  EXPECT_FALSE(pml.invoke(write_call("X", t0 + 80ms)).get().ok());

  cfg.payload = fs::json{{"lockout_window_ms", -1}};
  EXPECT_EQ(pml.invoke(cfg).get().error, Errc::ValidationFailed);
}

TEST(PmlTest, ExecutionCostDelaysCompletion) {
  Pml pml;
  pml.register_plugin(echo_plugin("p", {"a"}));
  pml.set_execution_cost("a", 2ms);
  ApiCall c;
  c.api_id = "a";
  const auto start = Clock::now();
  pml.invoke(c).get();
  EXPECT_GE(Clock::now() - start, 2ms);
}

}  // namespace
}  // namespace hexsim::pml

namespace hexsim::fs {
namespace {

using namespace std::chrono_literals;

FsContext two_slice_context() {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "priority_weighted", {}});
  ctx.create_slice({SliceId(2), SliceState::Shared, {}, "priority_weighted", {}});
  Bearer b1;
  b1.drb_id = DrbId(1);
  b1.ue_id = UeId(1);
  ctx.add_drb(SliceId(1), b1);
  Bearer b2;
  b2.drb_id = DrbId(2);
  b2.ue_id = UeId(2);
  ctx.add_drb(SliceId(2), b2);
  return ctx;
}

TEST(FsPluginTest, ControlVisibleAtNextBoundary) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  store.on_tti_boundary();
  SliceUpdate u;
  u.slice_id = SliceId(2);
  u.state = SliceState::Dedicated;
  u.dedicated_rb = 85;
  plugin.control({{u}, {}}, "ric-a");
  EXPECT_EQ(store.published()->slice(SliceId(2)).state, SliceState::Shared);
  EXPECT_EQ(store.live().slice(SliceId(2)).state, SliceState::Shared);
  store.on_tti_boundary();
  EXPECT_EQ(store.published()->slice(SliceId(2)).state, SliceState::Dedicated);
  EXPECT_EQ(store.published()->slice(SliceId(2)).rrc.dedicated_rb, 85);

  u.state = SliceState::Prioritized;
  u.dedicated_rb.reset();
  u.prioritized_rb = 85;
  plugin.control({{u}, {}}, "ric-a");
  store.on_tti_boundary();
  EXPECT_EQ(store.published()->slice(SliceId(2)).rrc, (RadioResourceConfig{0, 85, 1}));
}

TEST(FsPluginTest, ControlIsAllOrNothing) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  SliceUpdate good;
  good.slice_id = SliceId(1);
  good.shared_priority = 4;
  SliceUpdate bad;
  bad.slice_id = SliceId(9);
  bad.shared_priority = 2;
  try {
    plugin.control({{good, bad}, {}}, "ric-a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownId);
  }
  store.on_tti_boundary();
  EXPECT_EQ(store.published()->slice(SliceId(1)).rrc.shared_priority, 1);
  EXPECT_EQ(plugin.context_changes(0).size(), 4u);  // creation and DRB records only
}

TEST(FsPluginTest, BearerPriorityControl) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  plugin.control({{}, {{UeId(2), std::nullopt, 5}}}, "ric-a");
  store.on_tti_boundary();
  EXPECT_EQ(store.published()->bearer(DrbId(2)).bearer_priority, 5);
  try {
    plugin.control({{}, {{UeId(1), DrbId(2), 3}}}, "ric-a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownId);
  }
}

TEST(FsPluginTest, UnknownSchedulerRejected) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  SliceUpdate u;
  u.slice_id = SliceId(1);
  u.fd_scheduler = "nope";
  EXPECT_THROW(plugin.control({{u}, {}}, "x"), Error);
  u.fd_scheduler = "round_robin";
  plugin.control({{u}, {}}, "x");
  store.on_tti_boundary();
  EXPECT_EQ(store.published()->slice(SliceId(1)).fd_scheduler, "round_robin");
}

TEST(FsPluginTest, ContextChangeQueries) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  const auto base = store.read_staged([](const FsContext& c) { return c.latest_change_seq(); });
  for (int i = 0; i < 3; ++i) {
    SliceUpdate u;
    u.slice_id = SliceId(1);
    u.shared_priority = 2 + i;
    plugin.control({{u}, {}}, "ric-b");
  }
  const auto changes = plugin.context_changes(base);
  ASSERT_EQ(changes.size(), 3u);
  EXPECT_EQ(changes[0].trigger.procedure, "FS Control Request");
  EXPECT_EQ(changes[0].trigger.source, "ric-b");
  EXPECT_TRUE(plugin.context_changes(changes.back().global_seq).empty());
}

TEST(FsPluginTest, PeriodicTelemetry) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  int fired = 0;
  int empty_reports = 0;
  plugin.register_telemetry({{{SliceId(1)}, {}}, {TelemetryTrigger::Kind::Periodic, 1000, ""},
                             [&](const TelemetryEvent& e) {
                               ASSERT_TRUE(e.report.has_value());
                               EXPECT_EQ(e.report->slices.size(), 1u);
                               ++fired;
                             }});
  plugin.register_telemetry({{}, {TelemetryTrigger::Kind::Periodic, 1000, ""},
                             [&](const TelemetryEvent& e) {
                               if (e.report->slices.empty() && e.report->ues.empty()) ++empty_reports;
                             }});
  for (std::uint64_t t = 1; t <= 10000; ++t) plugin.on_tti(t);
  EXPECT_EQ(fired, 10);
  EXPECT_EQ(empty_reports, 10);
}

TEST(FsPluginTest, RegistrationErrors) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  try {
    plugin.register_telemetry({{{SliceId(1)}, {}}, {TelemetryTrigger::Kind::Periodic, 0, ""}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadPeriod);
  }
  try {
    plugin.register_telemetry({{{SliceId(7)}, {}}, {TelemetryTrigger::Kind::Periodic, 100, ""}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownId);
  }
  EXPECT_EQ(plugin.registration_count(), 0u);
}

TEST(FsPluginTest, EventTelemetryFiresPerChange) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  int records = 0;
  const auto id = plugin.register_telemetry({{{SliceId(1)}, {}},
                                             {TelemetryTrigger::Kind::Event, 0, "context_change"},
                                             [&](const TelemetryEvent& e) {
                                               for (const auto& r : e.changes) {
                                                 EXPECT_EQ(r.slice_id, SliceId(1));
                                                 ++records;
                                               }
                                             }});
  constexpr int kChanges = 7;
  for (int i = 0; i < kChanges; ++i) {
    SliceUpdate u1;
    u1.slice_id = SliceId(1);
    u1.shared_priority = 1 + i;
    SliceUpdate u2 = u1;
    u2.slice_id = SliceId(2);
    plugin.control({{u1, u2}, {}}, "x");
  }
  EXPECT_EQ(records, kChanges);
  plugin.deregister_telemetry(id);
  SliceUpdate u;
  u.slice_id = SliceId(1);
  u.shared_priority = 9;
  plugin.control({{u}, {}}, "x");
  EXPECT_EQ(records, kChanges);
}

TEST(FsPluginTest, PmlRoundTripThroughApis) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  pml::Pml pml;
  pml.register_plugin(plugin.manifest());
  store.on_tti_boundary();

  pml::ApiCall stats;
  stats.api_id = kApiStatistics;
  stats.payload = Targets{{SliceId(1)}, {UeId(1)}};
  const auto r = pml.invoke(stats).get();
  ASSERT_TRUE(r.ok());
  const auto report = std::any_cast<ContextReport>(r.value);
  EXPECT_EQ(report.slices.size(), 1u);
  EXPECT_EQ(report.ues.size(), 1u);

  pml::ApiCall ctl;
  ctl.api_id = kApiControl;
  ctl.caller_id = "ric-a";
  SliceUpdate u;
  u.slice_id = SliceId(1);
  u.state = SliceState::Dedicated;
  u.dedicated_rb = 50;
  ctl.payload = ControlRequest{{u}, {}};
  ASSERT_TRUE(pml.invoke(ctl).get().ok());
  ctl.caller_id = "ric-b";
  EXPECT_EQ(pml.invoke(ctl).get().error, Errc::LockedOut);

  ctl.payload = std::string("garbage");
  EXPECT_EQ(pml.invoke(ctl).get().error, Errc::ValidationFailed);
}

TEST(FsPluginTest, AtomicPublicationUnderConcurrentWrites) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (int i = 0; i < 2000 && !stop; ++i) {
      SliceUpdate a;
      a.slice_id = SliceId(1);
      a.shared_priority = 1 + i % 50;
      SliceUpdate b = a;
      b.slice_id = SliceId(2);
      plugin.control({{a, b}, {}}, "x");
    }
    stop = true;
  });
  int torn = 0;
  int observed = 0;
  while (!stop) {
    store.on_tti_boundary();
    const auto snap = store.published();
    ++observed;
    if (snap->slice(SliceId(1)).rrc.shared_priority != snap->slice(SliceId(2)).rrc.shared_priority) ++torn;
  }
  writer.join();
  EXPECT_GT(observed, 0);
  EXPECT_EQ(torn, 0);
}

double thread_cpu_us() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return ts.tv_sec * 1e6 + ts.tv_nsec / 1e3;
}

// TTI work (boundary adoption, publication, scheduling) measured as CPU time
// of the driver thread so that core sharing with PML workers is not counted.
double p95_tti_us(FsStore& store, FsPlugin& plugin, int ttis) {
  std::vector<double> samples;
  for (int t = 0; t < ttis; ++t) {
    const double start = thread_cpu_us();
    plugin.on_tti(static_cast<std::uint64_t>(t));
    const auto& live = store.live();
    fssf::TtiInput in;
    in.total_rb = live.total_rb();
    for (const auto& [id, ue] : live.ues()) in.schedulable_ues.push_back({id, 1226.0});
    for (const auto& [id, s] : live.slices()) {
      fssf::SliceInput si{id, s.state, s.rrc, s.fd_scheduler, {}};
      for (auto drb : s.bearers) {
        const auto& b = live.bearer(drb);
        si.drbs.push_back({drb, b.ue_id, b.bearer_priority, 50});
      }
      in.slices.push_back(si);
    }
    fssf::run_tti(in);
    samples.push_back(thread_cpu_us() - start);
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() * 95 / 100];
}

TEST(FsPluginTest, TtiPathNotBlockedByInFlightInvokes) {
  FsStore store(two_slice_context());
  FsPlugin plugin(store);
  pml::Pml pml(0ms);
  pml.register_plugin(plugin.manifest());
  const double idle = p95_tti_us(store, plugin, 2000);

  pml.set_execution_cost(kApiControl, 100us);
  for (int i = 0; i < 1000; ++i) {
    pml::ApiCall c;
    c.api_id = kApiControl;
    c.caller_id = "ric-" + std::to_string(i % 4);
    SliceUpdate u;
    u.slice_id = SliceId(1 + i % 2);
    u.shared_priority = 1 + i % 7;
    c.payload = ControlRequest{{u}, {}};
    pml.invoke(c, nullptr);
  }
  EXPECT_GT(pml.in_flight(), 900u);
  const double busy = p95_tti_us(store, plugin, 2000);
  pml.drain();
  EXPECT_LE(busy, 2.0 * idle) << "idle p95 " << idle << "us, busy p95 " << busy << "us";
}

}  // namespace
}  // namespace hexsim::fs
