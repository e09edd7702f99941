#pragma once

// Simulated near-RT RIC: an E2-lite client, scenario replay against the agent
// and the radio model in virtual time, and the agent benchmarks.

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hexsim/agent.hpp"
#include "hexsim/metrics_csv.hpp"
#include "hexsim/scenario.hpp"
#include "hexsim/transport.hpp"

namespace hexsim::ric {

using e2lite::Frame;
using e2lite::MsgType;
using nlohmann::json;

// RIC end of one agent session. Single-threaded: the owner is the only reader.
class RicClient {
 public:
  explicit RicClient(std::unique_ptr<transport::Channel> channel);

  // Answers the agent's SetupRequest accepting every offered function and
  // returns the offered ids.
  std::vector<std::uint32_t> answer_setup(std::chrono::milliseconds timeout);

  std::uint32_t send(MsgType type, json payload);
  // Waits for the response to `correlation_id`, buffering unsolicited frames.
  // Throws Error(Timeout) when nothing arrives in time.
  Frame await_response(std::uint32_t correlation_id, std::chrono::milliseconds timeout);
  Frame request(MsgType type, json payload, std::chrono::milliseconds timeout);
  // Waits until `count` responses (any correlation id) are buffered and takes them.
  std::vector<Frame> await_responses(std::size_t count, std::chrono::milliseconds timeout);
  std::optional<Frame> next_indication(std::chrono::milliseconds timeout);

  const std::vector<Frame>& alarms() const { return alarms_; }

 private:
  // Reads one frame into the buffers; false on timeout.
  bool pump(std::chrono::milliseconds timeout);

  std::unique_ptr<transport::Channel> channel_;
  std::uint32_t next_corr_ = 1;
  std::deque<Frame> responses_;
  std::deque<Frame> indications_;
  std::vector<Frame> alarms_;
};

struct ControlOutcome {
  double t_s = 0.0;
  std::string action;
  std::string target;
  bool ok = false;
  std::string cause;
};

struct ScenarioResult {
  std::vector<metrics::MetricRecord> records;
  std::vector<ControlOutcome> outcomes;
  std::uint64_t control_requests = 0;
  std::uint64_t control_responses = 0;
  std::uint64_t indications = 0;
};

// Replays `script` in virtual time: one RIC session, a periodic 1000 ms
// slice-context subscription, controls sent at their event times and RAN-side
// events applied to the FS context and traffic profile. Emits cell, slice and
// UE records per report second and a final agent record.
// Throws Error(SetupRejected) when the session cannot be established.
ScenarioResult run_scenario(const scenario::Scenario& script);

// Records of one scope and id, in time order.
std::vector<metrics::MetricRecord> series(const std::vector<metrics::MetricRecord>& records,
                                          const std::string& scope, const std::string& id);

// Averages over the settled seconds of each phase; phases are delimited by
// the distinct event times. A record at t_s covers the second before t_s.
struct PhaseStats {
  double start_s = 0.0;
  double end_s = 0.0;
  std::map<std::string, double> slice_mbps;    // mean
  std::map<std::string, double> slice_rtt_ms;  // max
  std::map<std::string, double> ue_mbps;       // mean
  std::map<std::string, double> ue_rb;         // mean
  double utilization = 0.0;                    // mean cell utilization
};

std::vector<PhaseStats> summarize_phases(const scenario::Scenario& script, const ScenarioResult& result,
                                         double settle_s = 3.0);

struct DelayConfig {
  std::vector<int> instances{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  int period_ms = 50;   // per-instance control period
  int rounds = 20;      // measured periods per instance count
  int warmup_rounds = 2;
  std::chrono::microseconds execution_cost{200};  // emulated RAN function action time
  bool aligned = true;  // every instance fires at the period start; false staggers them evenly
};

struct DelayStats {
  int instances = 0;
  std::size_t samples = 0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double mean_us = 0.0;
};

// Wall-clock processing delay, request receipt to action API call.
std::vector<DelayStats> benchmark_delay(const DelayConfig& config, agent::ExecutionMode mode);

struct ReliabilityConfig {
  std::vector<int> rates{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};  // messages per second
  int duration_s = 60;
  int burst_period_ms = 100;  // controls of one period arrive back to back
};

struct ReliabilityStats {
  int rate = 0;
  std::uint64_t received = 0;
  std::uint64_t executed = 0;
  double ratio = 0.0;
};

// Virtual-time executed/received ratio per message rate.
std::vector<ReliabilityStats> benchmark_reliability(const ReliabilityConfig& config, agent::ExecutionMode mode);

// Throws Error(InvalidInput) for unknown keys or non-positive values.
DelayConfig parse_delay_config(const json& doc);
ReliabilityConfig parse_reliability_config(const json& doc);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares; needs two or more distinct x values.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hexsim::ric
