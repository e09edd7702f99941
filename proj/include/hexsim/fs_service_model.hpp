#pragma once

// FS service model: E2-lite payload schemas for the FS Report and Control
// services, builders used by the RIC side, and the agent plugins.

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hexsim/fs_plugin.hpp"
#include "hexsim/ha_plugin.hpp"
#include "hexsim/slice_model.hpp"

namespace hexsim::sm {

using nlohmann::json;

enum class ReportKind { SliceContext, UeContext, ContextChange };
std::string_view to_string(ReportKind k);

enum class Routine { SliceConfig, UeConfig };

struct ControlHeader {
  enum class Target { Slice, Ue } target = Target::Slice;
  std::vector<std::uint32_t> ids;
};

struct ControlPayload {
  std::uint32_t ran_function_id = 0;
  ControlHeader header;
  Routine routine = Routine::SliceConfig;
  fs::ControlRequest request;
};

struct SubscriptionPayload {
  std::uint32_t ran_function_id = 0;
  ReportKind report = ReportKind::SliceContext;
  fs::Targets targets;
  fs::TelemetryTrigger trigger;
};

struct QueryPayload {
  std::uint32_t ran_function_id = 0;
  ReportKind report = ReportKind::SliceContext;
  fs::Targets targets;
  std::uint64_t since = 0;
};

// Schema checks; each throws Error(SchemaViolation) with the offending field.
ControlPayload parse_control(const json& payload);
SubscriptionPayload parse_subscription(const json& payload);
QueryPayload parse_query(const json& payload);

// Builders for RIC-side requests.
json slice_config_control(std::uint32_t ran_function_id, const fs::SliceUpdate& update);
json ue_config_control(std::uint32_t ran_function_id, const fs::UeUpdate& update);
json subscription_request(std::uint32_t ran_function_id, ReportKind report,
                          const fs::Targets& targets, const fs::TelemetryTrigger& trigger);
json query_request(std::uint32_t ran_function_id, ReportKind report, const fs::Targets& targets,
                   std::uint64_t since = 0);

// Report payloads carried by Indications and QueryResponses.
json encode_report(ReportKind kind, const fs::ContextReport& report);
json encode_changes(const std::vector<fs::ContextChangeRecord>& changes);

// Resolves the slices a UE's bearers belong to (used for resource checks).
using UeSliceResolver = std::function<std::vector<SliceId>(UeId)>;

class FsServiceModelPlugin : public agent::ServiceModelPlugin {
 public:
  static constexpr const char* kName = "fs-sm";

  explicit FsServiceModelPlugin(UeSliceResolver resolver = {});

  std::string name() const override { return kName; }
  void bind_function(std::uint32_t ran_function_id) override;

  // Schema-checked typed control payload for a bound function.
  ControlPayload validate_sm_payload(std::uint32_t ran_function_id, const json& payload) const;

  agent::ActionCall control_action(std::uint32_t ran_function_id, const json& payload) const override;
  agent::ActionCall subscription_action(std::uint32_t ran_function_id, const json& payload,
                                        agent::ReportDelivery deliver) const override;
  agent::ActionCall query_action(std::uint32_t ran_function_id, const json& payload) const override;
  agent::ActionCall unsubscribe_action(const std::any& subscription_result) const override;
  json encode_query_result(const json& query_payload, const std::any& value) const override;

 private:
  void require_bound(std::uint32_t ran_function_id) const;

  UeSliceResolver resolver_;
  std::set<std::uint32_t> functions_;
};

// OAM config plugin for runtime PML settings: {"lockout_window_ms": n}.
class PmlConfigPlugin : public agent::ConfigPlugin {
 public:
  static constexpr const char* kName = "pml-config";

  std::string name() const override { return kName; }
  void validate(const json& doc) const override;
  agent::ActionCall config_action(const json& doc) const override;
};

}  // namespace hexsim::sm
