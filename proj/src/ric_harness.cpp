#include "hexsim/ric_harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <thread>

#include "hexsim/error.hpp"
#include "hexsim/fs_plugin.hpp"
#include "hexsim/fs_service_model.hpp"
#include "hexsim/radio_sim.hpp"

namespace hexsim::ric {

using namespace std::chrono_literals;
using std::chrono::milliseconds;

// ---- RicClient ------------------------------------------------------------

RicClient::RicClient(std::unique_ptr<transport::Channel> channel) : channel_(std::move(channel)) {}

bool RicClient::pump(milliseconds timeout) {
  auto f = channel_->receive(timeout);
  if (!f) return false;
  switch (f->msg_type) {
    case MsgType::Indication: indications_.push_back(std::move(*f)); break;
    case MsgType::AlarmNotification: alarms_.push_back(std::move(*f)); break;
    default: responses_.push_back(std::move(*f)); break;
  }
  return true;
}

std::vector<std::uint32_t> RicClient::answer_setup(milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto it = std::find_if(responses_.begin(), responses_.end(),
                           [](const Frame& f) { return f.msg_type == MsgType::SetupRequest; });
    if (it != responses_.end()) {
      std::vector<std::uint32_t> offered;
      for (const auto& fn : it->payload.value("functions", json::array())) {
        offered.push_back(fn.at("ran_function_id").get<std::uint32_t>());
      }
      channel_->send(Frame{MsgType::SetupResponse, it->correlation_id, json{{"accepted", offered}}});
      responses_.erase(it);
      return offered;
    }
    const auto left = std::chrono::duration_cast<milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left <= 0ms || !pump(left)) throw Error(Errc::Timeout, "no SetupRequest from the agent");
  }
}

std::uint32_t RicClient::send(MsgType type, json payload) {
  const auto corr = next_corr_++;
  channel_->send(Frame{type, corr, std::move(payload)});
  return corr;
}

Frame RicClient::await_response(std::uint32_t correlation_id, milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto it = std::find_if(responses_.begin(), responses_.end(),
                           [&](const Frame& f) { return f.correlation_id == correlation_id; });
    if (it != responses_.end()) {
      Frame f = std::move(*it);
      responses_.erase(it);
      return f;
    }
    const auto left = std::chrono::duration_cast<milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left <= 0ms || !pump(left)) {
      throw Error(Errc::Timeout, "no response to correlation id " + std::to_string(correlation_id));
    }
  }
}

Frame RicClient::request(MsgType type, json payload, milliseconds timeout) {
  return await_response(send(type, std::move(payload)), timeout);
}

std::vector<Frame> RicClient::await_responses(std::size_t count, milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (responses_.size() < count) {
    const auto left = std::chrono::duration_cast<milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left <= 0ms || !pump(left)) {
      throw Error(Errc::Timeout, std::to_string(responses_.size()) + " of " + std::to_string(count) + " responses");
    }
  }
  std::vector<Frame> out(std::make_move_iterator(responses_.begin()),
                         std::make_move_iterator(responses_.begin() + static_cast<std::ptrdiff_t>(count)));
  responses_.erase(responses_.begin(), responses_.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

std::optional<Frame> RicClient::next_indication(milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (indications_.empty()) {
    const auto left = std::chrono::duration_cast<milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left <= 0ms || !pump(left)) return std::nullopt;
  }
  Frame f = std::move(indications_.front());
  indications_.pop_front();
  return f;
}

// ---- Agent rig --------------------------------------------------------------

namespace {

constexpr auto kResponseTimeout = 10s;
constexpr const char* kRicId = "ric-1";

// FS store, plugin, PML and agent with one RAN function per slice, plus the
// RIC session. The agent stops before the PML and the FS plugin.
struct Rig {
  Rig(fs::FsContext ctx, agent::ExecutionMode mode) : store(std::move(ctx)), plugin(store) {
    pml.register_plugin(plugin.manifest());
    store.on_tti_boundary();
    agent::AgentConfig cfg;
    cfg.mode = mode;
    store.read_staged([&](const fs::FsContext& c) {
      for (const auto& [id, _] : c.slices()) {
        agent::FunctionSpec f;
        f.ran_function_id = id.value;
        f.name = "fs-slice-" + std::to_string(id.value);
        f.required_plugins = {fs::kFsPluginId};
        f.ha_plugin = sm::FsServiceModelPlugin::kName;
        f.resources = {"slice/" + std::to_string(id.value)};
        cfg.functions.push_back(std::move(f));
      }
      return 0;
    });
    auto resolver = [this](UeId ue) {
      return store.read_staged([&](const fs::FsContext& c) {
        std::vector<SliceId> out;
        if (!c.has_ue(ue)) return out;
        for (auto d : c.ue(ue).bearers) out.push_back(c.bearer(d).slice_id);
        return out;
      });
    };
    agent = std::make_unique<agent::Agent>(
        pml, std::move(cfg), agent::Plugins{{std::make_shared<sm::FsServiceModelPlugin>(resolver)}, {}});

    auto [agent_end, ric_end] = transport::make_inproc_pair();
    ric = std::make_unique<RicClient>(std::move(ric_end));
    auto fut = agent->connect(kRicId, agent::PeerKind::Ric, std::move(agent_end));
    try {
      ric->answer_setup(kResponseTimeout);
    } catch (const Error& e) {
      throw Error(Errc::SetupRejected, e.what());
    }
    if (fut.wait_for(kResponseTimeout) != std::future_status::ready) {
      throw Error(Errc::SetupRejected, "setup did not complete");
    }
    const auto set = fut.get();
    if (!set.refused.empty()) throw Error(Errc::SetupRejected, set.refused.front().second);
  }

  ~Rig() {
    if (agent && agent->is_connected(kRicId)) agent->disconnect(kRicId);
    agent.reset();
    pml.drain();
  }

  fs::FsStore store;
  fs::FsPlugin plugin;
  pml::Pml pml;
  std::unique_ptr<agent::Agent> agent;
  std::unique_ptr<RicClient> ric;
};

std::string id_string(std::uint32_t v) { return std::to_string(v); }

metrics::MetricRecord record(double t_s, const char* scope, std::string id) {
  metrics::MetricRecord r;
  r.t_s = t_s;
  r.scope = scope;
  r.id = std::move(id);
  return r;
}

void emit_report(double t_s, const Frame& indication, const radio::WindowStats& w, int total_rb,
                 std::vector<metrics::MetricRecord>& out) {
  const auto slices = indication.payload.at("report").at("slices").get<std::vector<fs::SliceReport>>();

  auto cell = record(t_s, "cell", "1");
  double cell_mbps = 0.0;
  for (const auto& [_, v] : w.slice_mbps) cell_mbps += v;
  cell.throughput_mbps = cell_mbps;
  cell.alloc_rb = w.utilization * total_rb;
  cell.utilization = w.utilization;
  out.push_back(std::move(cell));

  struct UeAgg {
    double mbps = 0.0;
    double rtt = 0.0;
    SliceId slice;
    int bp = 1;
  };
  std::map<UeId, UeAgg> ues;
  for (const auto& s : slices) {
    auto r = record(t_s, "slice", id_string(s.slice_id.value));
    double mbps = 0.0;
    double rtt = 0.0;
    for (const auto& b : s.bearers) {
      mbps += b.stats.throughput_mbps;
      rtt = std::max(rtt, b.stats.packet_delay_ms);
      auto& u = ues[b.ue_id];
      u.mbps += b.stats.throughput_mbps;
      u.rtt = std::max(u.rtt, b.stats.packet_delay_ms);
      u.slice = s.slice_id;
      u.bp = b.bearer_priority;
    }
    const auto rb = w.slice_rb.find(s.slice_id);
    const double alloc = rb == w.slice_rb.end() ? 0.0 : rb->second;
    r.throughput_mbps = mbps;
    if (!s.bearers.empty()) r.rtt_ms = rtt;
    r.alloc_rb = alloc;
    r.state = std::string(fs::to_string(s.state));
    r.utilization = alloc / total_rb;
    r.extra = {{"dedicated_rb", std::to_string(s.rrc.dedicated_rb)},
               {"prioritized_rb", std::to_string(s.rrc.prioritized_rb)},
               {"shared_priority", std::to_string(s.rrc.shared_priority)},
               {"ues", std::to_string(s.bearers.size())}};
    out.push_back(std::move(r));
  }
  for (const auto& [id, u] : ues) {
    auto r = record(t_s, "ue", id_string(id.value));
    const auto rb = w.ue_rb.find(id);
    const double alloc = rb == w.ue_rb.end() ? 0.0 : rb->second;
    r.throughput_mbps = u.mbps;
    r.rtt_ms = u.rtt;
    r.alloc_rb = alloc;
    r.utilization = alloc / total_rb;
    r.extra = {{"slice", id_string(u.slice.value)}, {"bp", std::to_string(u.bp)}};
    out.push_back(std::move(r));
  }
}

}  // namespace

// ---- Scenario replay ------------------------------------------------------

ScenarioResult run_scenario(const scenario::Scenario& script) {
  using scenario::Action;

  fs::FsContext ctx(script.cell.total_rb);
  try {
    for (const auto& s : script.slices) ctx.create_slice(s.config);
    for (const auto& u : script.ues) {
      if (u.attached) ctx.add_drb(u.slice_id, fs::Bearer{u.drb_id, u.ue_id, u.slice_id, u.bearer_priority, 9, {}});
    }
  } catch (const Error& e) {
    throw Error(Errc::ScenarioError, e.what());
  }

  Rig rig(std::move(ctx), agent::ExecutionMode::Decoupled);
  radio::Cell cell(script.cell, rig.store, &rig.plugin, {}, script.seed);
  cell.set_arrival_jitter(script.arrival_jitter);
  for (const auto& u : script.ues) cell.traffic().set_rate(u.drb_id, 0, u.offered_mbps);

  std::optional<radio::WindowStats> window;
  cell.add_tti_hook([&](std::uint64_t tti, std::uint64_t now_ms) {
    rig.agent->on_tti(tti);
    if (now_ms > 0 && now_ms % 1000 == 0) window = cell.window();
  });

  ScenarioResult result;
  fs::Targets targets;
  for (const auto& s : script.slices) targets.slices.push_back(s.config.slice_id);
  if (!targets.slices.empty()) {
    fs::TelemetryTrigger trigger;
    trigger.period_ms = 1000;
    const auto resp = rig.ric->request(
        MsgType::SubscriptionRequest,
        sm::subscription_request(targets.slices.front().value, sm::ReportKind::SliceContext, targets, trigger),
        kResponseTimeout);
    if (!resp.payload.value("ok", false)) throw Error(Errc::ScenarioError, "subscription refused: " + resp.payload.dump());
  }

  auto control = [&](const scenario::Event& e, json payload, std::string target) {
    ++result.control_requests;
    const auto resp = rig.ric->request(MsgType::ControlRequest, std::move(payload), kResponseTimeout);
    ++result.control_responses;
    ControlOutcome o{e.t_s, std::string(to_string(e.action)), std::move(target), resp.msg_type == MsgType::ControlAck,
                     resp.payload.value("cause", std::string())};
    result.outcomes.push_back(std::move(o));
  };
  auto ran_event = [&](const scenario::Event& e, const std::string& target, const std::function<void(fs::FsContext&)>& fn) {
    ControlOutcome o{e.t_s, std::string(to_string(e.action)), target, true, {}};
    try {
      rig.store.mutate(fn);
    } catch (const Error& err) {
      o.ok = false;
      o.cause = std::string(to_string(err.code()));
    }
    result.outcomes.push_back(std::move(o));
  };

  auto apply = [&](const scenario::Event& e, std::uint64_t now_ms) {
    switch (e.action) {
      case Action::SliceControl: {
        const auto u = scenario::slice_update(e);
        control(e, sm::slice_config_control(u.slice_id.value, u), "slice/" + id_string(u.slice_id.value));
        break;
      }
      case Action::UeControl: {
        const auto u = scenario::ue_update(e);
        const auto fn = script.ue(u.ue_id).slice_id.value;
        control(e, sm::ue_config_control(fn, u), "ue/" + id_string(u.ue_id.value));
        break;
      }
      case Action::TrafficChange: {
        const double mbps = scenario::event_rate(e);
        for (auto id : scenario::event_ues(e)) cell.traffic().set_rate(script.ue(id).drb_id, now_ms + 1, mbps);
        result.outcomes.push_back({e.t_s, "TrafficChange", "ues", true, {}});
        break;
      }
      case Action::UsersJoin: {
        const auto ids = scenario::event_ues(e);
        ran_event(e, "ues", [&](fs::FsContext& c) {
          for (auto id : ids) {
            const auto& u = script.ue(id);
            if (!c.has_drb(u.drb_id)) c.add_drb(u.slice_id, fs::Bearer{u.drb_id, u.ue_id, u.slice_id, u.bearer_priority, 9, {}});
          }
        });
        break;
      }
      case Action::UsersLeave: {
        const auto ids = scenario::event_ues(e);
        ran_event(e, "ues", [&](fs::FsContext& c) {
          for (auto id : ids) {
            const auto& u = script.ue(id);
            if (c.has_drb(u.drb_id)) c.remove_drb(c.bearer(u.drb_id).slice_id, u.drb_id);
          }
        });
        break;
      }
    }
  };

  const auto total_ms = static_cast<std::uint64_t>(std::llround(script.duration_s * 1000.0));
  std::size_t next_event = 0;
  for (std::uint64_t t = 0; t <= total_ms; ++t) {
    cell.step_tti();
    if (t > 0 && t % 1000 == 0 && !targets.slices.empty()) {
      auto ind = rig.ric->next_indication(kResponseTimeout);
      if (!ind) throw Error(Errc::Timeout, "no indication at t=" + std::to_string(t) + " ms");
      ++result.indications;
      emit_report(static_cast<double>(t / 1000), *ind, *window, script.cell.total_rb, result.records);
    } else if (t > 0 && t % 1000 == 0) {
      auto cell_rec = record(static_cast<double>(t / 1000), "cell", "1");
      cell_rec.throughput_mbps = 0.0;
      cell_rec.alloc_rb = window->utilization * script.cell.total_rb;
      cell_rec.utilization = window->utilization;
      result.records.push_back(std::move(cell_rec));
    }
    while (next_event < script.events.size() && script.events[next_event].t_ms() <= t) {
      apply(script.events[next_event++], t);
    }
  }

  std::size_t acks = 0;
  std::size_t failures = 0;
  for (const auto& o : result.outcomes) {
    if (o.action != "SliceControl" && o.action != "UeControl") continue;
    (o.ok ? acks : failures) += 1;
  }
  auto agent_rec = record(script.duration_s, "agent", rig.agent->config().node_id);
  agent_rec.extra = {{"controls", std::to_string(result.control_requests)},
                     {"acks", std::to_string(acks)},
                     {"failures", std::to_string(failures)},
                     {"indications", std::to_string(result.indications)}};
  result.records.push_back(std::move(agent_rec));
  return result;
}

std::vector<metrics::MetricRecord> series(const std::vector<metrics::MetricRecord>& records, const std::string& scope,
                                          const std::string& id) {
  std::vector<metrics::MetricRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const auto& r) { return r.scope == scope && r.id == id; });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_s < b.t_s; });
  return out;
}

std::vector<PhaseStats> summarize_phases(const scenario::Scenario& script, const ScenarioResult& result,
                                         double settle_s) {
  std::set<double> cuts{0.0, script.duration_s};
  for (const auto& e : script.events) cuts.insert(e.t_s);
  std::vector<PhaseStats> out;
  for (auto it = cuts.begin(); std::next(it) != cuts.end(); ++it) {
    PhaseStats p;
    p.start_s = *it;
    p.end_s = *std::next(it);
    const double from = std::min(p.start_s + 1.0 + settle_s, p.end_s);
    std::map<std::string, int> slice_n;
    std::map<std::string, int> ue_n;
    int cell_n = 0;
    for (const auto& r : result.records) {
      if (r.t_s < from || r.t_s > p.end_s) continue;
      if (r.scope == "slice") {
        p.slice_mbps[r.id] += r.throughput_mbps.value_or(0.0);
        p.slice_rtt_ms[r.id] = std::max(p.slice_rtt_ms[r.id], r.rtt_ms.value_or(0.0));
        ++slice_n[r.id];
      } else if (r.scope == "ue") {
        p.ue_mbps[r.id] += r.throughput_mbps.value_or(0.0);
        p.ue_rb[r.id] += r.alloc_rb.value_or(0.0);
        ++ue_n[r.id];
      } else if (r.scope == "cell") {
        p.utilization += r.utilization.value_or(0.0);
        ++cell_n;
      }
    }
    for (auto& [id, v] : p.slice_mbps) v /= slice_n[id];
    for (auto& [id, v] : p.ue_mbps) v /= ue_n[id];
    for (auto& [id, v] : p.ue_rb) v /= ue_n[id];
    if (cell_n > 0) p.utilization /= cell_n;
    out.push_back(std::move(p));
  }
  return out;
}

// ---- Benchmarks -------------------------------------------------------------

namespace {

fs::FsContext shared_slices(int n) {
  fs::FsContext ctx(106);
  for (int i = 1; i <= n; ++i) {
    ctx.create_slice({SliceId(static_cast<std::uint32_t>(i)), fs::SliceState::Shared, {}, "priority_weighted", {}});
  }
  return ctx;
}

json priority_control(std::uint32_t slice, int priority) {
  fs::SliceUpdate u;
  u.slice_id = SliceId(slice);
  u.shared_priority = priority;
  return sm::slice_config_control(slice, u);
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

}  // namespace

std::vector<DelayStats> benchmark_delay(const DelayConfig& config, agent::ExecutionMode mode) {
  std::vector<DelayStats> out;
  for (int n : config.instances) {
    DelayStats stats;
    stats.instances = n;
    if (n <= 0) {
      out.push_back(stats);
      continue;
    }
    Rig rig(shared_slices(n), mode);
    rig.pml.set_execution_cost(fs::kApiControl, config.execution_cost);
    std::vector<std::array<json, 2>> payloads;
    for (int i = 1; i <= n; ++i) {
      payloads.push_back({priority_control(static_cast<std::uint32_t>(i), 2),
                          priority_control(static_cast<std::uint32_t>(i), 1)});
    }

    const auto period = std::chrono::microseconds(config.period_ms * 1000);
    const auto start = std::chrono::steady_clock::now() + 5ms;
    const int total_rounds = config.warmup_rounds + config.rounds;
    std::uint32_t first_measured = 0;
    for (int r = 0; r < total_rounds; ++r) {
      const auto round_start = start + r * period;
      for (int i = 0; i < n; ++i) {
        const auto offset = config.aligned ? std::chrono::microseconds(0) : period * i / n;
        std::this_thread::sleep_until(round_start + offset);
        const auto corr = rig.ric->send(MsgType::ControlRequest, payloads[static_cast<std::size_t>(i)][r % 2]);
        if (r == config.warmup_rounds && i == 0) first_measured = corr;
      }
      // The RIC reads acks once the period is over so that its own decoding
      // does not share the agent's CPU during the burst.
      std::this_thread::sleep_until(round_start + period * 9 / 10);
      rig.ric->await_responses(static_cast<std::size_t>(n), kResponseTimeout);
    }

    std::vector<double> delays;
    for (const auto& t : rig.agent->take_timings()) {
      if (t.msg_type != MsgType::ControlRequest || t.correlation_id < first_measured) continue;
      delays.push_back(static_cast<double>((t.invoke_time - t.receive_time).count()) / 1e3);
    }
    stats.samples = delays.size();
    if (!delays.empty()) {
      stats.median_us = percentile(delays, 0.5);
      stats.p95_us = percentile(delays, 0.95);
      stats.mean_us = std::accumulate(delays.begin(), delays.end(), 0.0) / static_cast<double>(delays.size());
    }
    out.push_back(stats);
  }
  return out;
}

std::vector<ReliabilityStats> benchmark_reliability(const ReliabilityConfig& config, agent::ExecutionMode mode) {
  std::vector<ReliabilityStats> out;
  for (int rate : config.rates) {
    Rig rig(shared_slices(1), mode);
    const int bursts = config.duration_s * 1000 / config.burst_period_ms;
    std::uint64_t sent = 0;
    std::uint64_t tti = 0;
    for (int b = 0; b < bursts; ++b) {
      const auto due = static_cast<std::uint64_t>(static_cast<long long>(b + 1) * rate * config.burst_period_ms / 1000);
      const auto k = due - sent;
      for (std::uint64_t i = 0; i < k; ++i) {
        rig.ric->send(MsgType::ControlRequest, priority_control(1, static_cast<int>((sent + i) % 2) + 1));
      }
      sent = due;
      // The whole burst is in before virtual time moves on.
      const auto deadline = std::chrono::steady_clock::now() + kResponseTimeout;
      while (rig.agent->control_counters().received < sent) {
        if (std::chrono::steady_clock::now() > deadline) throw Error(Errc::Timeout, "burst not received");
        std::this_thread::sleep_for(20us);
      }
      rig.agent->wait_idle();
      for (int t = 0; t < config.burst_period_ms; ++t) rig.agent->on_tti(++tti);
      rig.agent->wait_idle();
      rig.ric->await_responses(k, kResponseTimeout);
    }
    const auto c = rig.agent->control_counters();
    ReliabilityStats s;
    s.rate = rate;
    s.received = c.received;
    s.executed = c.executed;
    s.ratio = c.received > 0 ? static_cast<double>(c.executed) / static_cast<double>(c.received) : 1.0;
    out.push_back(s);
  }
  return out;
}

namespace {

void check_keys(const json& doc, const std::set<std::string>& keys, const char* what) {
  if (!doc.is_object()) throw Error(Errc::InvalidInput, std::string(what) + " config must be an object");
  for (const auto& [k, _] : doc.items()) {
    if (!keys.contains(k)) throw Error(Errc::InvalidInput, std::string("unknown ") + what + " config field " + k);
  }
}

}  // namespace

DelayConfig parse_delay_config(const json& doc) {
  check_keys(doc, {"mode", "instances", "period_ms", "rounds", "warmup_rounds", "execution_cost_us", "aligned"},
             "delay");
  DelayConfig c;
  try {
    if (doc.contains("mode") && doc["mode"] != "delay") throw Error(Errc::InvalidInput, "mode must be delay");
    c.instances = doc.value("instances", c.instances);
    c.period_ms = doc.value("period_ms", c.period_ms);
    c.rounds = doc.value("rounds", c.rounds);
    c.warmup_rounds = doc.value("warmup_rounds", c.warmup_rounds);
    c.execution_cost = std::chrono::microseconds(doc.value("execution_cost_us", c.execution_cost.count()));
    c.aligned = doc.value("aligned", c.aligned);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidInput, e.what());
  }
  const bool bad_n = std::any_of(c.instances.begin(), c.instances.end(), [](int n) { return n < 0; });
  if (bad_n || c.period_ms <= 0 || c.rounds <= 0 || c.warmup_rounds < 0 || c.execution_cost.count() < 0) {
    throw Error(Errc::InvalidInput, "delay config out of range");
  }
  return c;
}

ReliabilityConfig parse_reliability_config(const json& doc) {
  check_keys(doc, {"mode", "rates", "duration_s", "burst_period_ms"}, "reliability");
  ReliabilityConfig c;
  try {
    if (doc.contains("mode") && doc["mode"] != "reliability") {
      throw Error(Errc::InvalidInput, "mode must be reliability");
    }
    c.rates = doc.value("rates", c.rates);
    c.duration_s = doc.value("duration_s", c.duration_s);
    c.burst_period_ms = doc.value("burst_period_ms", c.burst_period_ms);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidInput, e.what());
  }
  const bool bad_rate = std::any_of(c.rates.begin(), c.rates.end(), [](int r) { return r <= 0; });
  if (c.rates.empty() || bad_rate || c.duration_s <= 0 || c.burst_period_ms <= 0 ||
      1000 % c.burst_period_ms != 0) {
    throw Error(Errc::InvalidInput, "reliability config out of range");
  }
  return c;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(Errc::InvalidInput, "fit needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::InvalidInput, "fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace hexsim::ric
