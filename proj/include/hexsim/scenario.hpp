#pragma once

// Scenario scripts: cell, slices, UEs and a timeline of RIC controls and
// RAN-side traffic events.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hexsim/ids.hpp"
#include "hexsim/radio_sim.hpp"
#include "hexsim/slice_model.hpp"
#include "json.hpp"

namespace hexsim::scenario {

using nlohmann::json;

enum class Action { SliceControl, UeControl, TrafficChange, UsersJoin, UsersLeave };
std::string_view to_string(Action a);

struct SliceSpec {
  fs::SliceConfig config;
};

struct UeSpec {
  UeId ue_id;
  SliceId slice_id;
  DrbId drb_id;
  int bearer_priority = 1;
  double offered_mbps = 0.0;
  bool attached = true;
};

struct Event {
  double t_s = 0.0;
  Action action = Action::SliceControl;
  json params = json::object();

  std::uint64_t t_ms() const;
};

struct Scenario {
  std::string name;
  double duration_s = 0.0;
  std::uint64_t seed = 1;
  radio::CellConfig cell;
  double arrival_jitter = 0.0;
  std::vector<SliceSpec> slices;
  std::vector<UeSpec> ues;
  std::vector<Event> events;  // sorted by t_s, stable for equal times

  const UeSpec& ue(UeId id) const;  // Throws Error(ScenarioError).
  bool has_slice(SliceId id) const;
};

// Throws Error(ScenarioError) with the offending field for malformed scripts,
// unknown ids, more than one cell, or events past the duration.
Scenario parse_scenario(const json& doc);
Scenario load_scenario(const std::string& path);

// Typed event parameters; each throws Error(ScenarioError).
fs::SliceUpdate slice_update(const Event& e);
fs::UeUpdate ue_update(const Event& e);
std::vector<UeId> event_ues(const Event& e);  // "ue_id" or "ue_ids"
double event_rate(const Event& e);            // TrafficChange "mbps"

}  // namespace hexsim::scenario
