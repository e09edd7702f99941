#include "hexsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "hexsim/error.hpp"

namespace hexsim::scenario {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::ScenarioError, what); }

void only_keys(const json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!keys.contains(k)) bad("unknown field " + where + "." + k);
  }
}

template <typename T>
T field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(where + "." + key + " is required");
  return field<T>(j, key, T{}, where);
}

fs::SliceState state_field(const json& j, const char* key, fs::SliceState fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto s = fs::parse_slice_state(field<std::string>(j, key, "", where));
  if (!s) bad(where + "." + key + " is not a slice state");
  return *s;
}

radio::CellConfig parse_cell(const json& j) {
  only_keys(j, {"total_rb", "per_rb_rate_mbps", "tti_ms", "base_rtt_ms", "rtt_cap_ms", "window_ttis"}, "cells[0]");
  radio::CellConfig c;
  c.total_rb = field(j, "total_rb", c.total_rb, "cells[0]");
  c.per_rb_rate_mbps = field(j, "per_rb_rate_mbps", c.per_rb_rate_mbps, "cells[0]");
  c.tti_ms = field(j, "tti_ms", c.tti_ms, "cells[0]");
  c.base_rtt_ms = field(j, "base_rtt_ms", c.base_rtt_ms, "cells[0]");
  c.rtt_cap_ms = field(j, "rtt_cap_ms", c.rtt_cap_ms, "cells[0]");
  c.window_ttis = field(j, "window_ttis", c.window_ttis, "cells[0]");
  try {
    radio::validate(c);
  } catch (const Error& e) {
    bad(e.what());
  }
  if (c.tti_ms != 1.0) bad("cells[0].tti_ms must be 1");
  return c;
}

SliceSpec parse_slice(const json& j, const std::string& where) {
  only_keys(j, {"slice_id", "state", "dedicated_rb", "prioritized_rb", "shared_priority", "fd_scheduler",
                "hu_associations"},
            where);
  SliceSpec s;
  auto& c = s.config;
  c.slice_id = SliceId(required<std::uint32_t>(j, "slice_id", where));
  c.default_active_state = state_field(j, "state", fs::SliceState::Shared, where);
  if (c.default_active_state == fs::SliceState::Idle) bad(where + ".state must be an active state");
  c.rrc.dedicated_rb = field(j, "dedicated_rb", 0, where);
  c.rrc.prioritized_rb = field(j, "prioritized_rb", 0, where);
  c.rrc.shared_priority = field(j, "shared_priority", 1, where);
  c.fd_scheduler = field<std::string>(j, "fd_scheduler", c.fd_scheduler, where);
  c.hu_associations = field(j, "hu_associations", std::set<std::string>{}, where);
  try {
    fs::validate_rrc(c.default_active_state, c.rrc);
  } catch (const Error& e) {
    bad(where + ": " + e.what());
  }
  return s;
}

UeSpec parse_ue(const json& j, const std::string& where) {
  only_keys(j, {"ue_id", "slice_id", "drb_id", "bearer_priority", "offered_mbps", "attached"}, where);
  UeSpec u;
  u.ue_id = UeId(required<std::uint32_t>(j, "ue_id", where));
  u.slice_id = SliceId(required<std::uint32_t>(j, "slice_id", where));
  u.drb_id = DrbId(field<std::uint32_t>(j, "drb_id", u.ue_id.value, where));
  u.bearer_priority = field(j, "bearer_priority", 1, where);
  u.offered_mbps = field(j, "offered_mbps", 0.0, where);
  u.attached = field(j, "attached", true, where);
  if (u.bearer_priority < 1) bad(where + ".bearer_priority must be >= 1");
  if (u.offered_mbps < 0.0) bad(where + ".offered_mbps must be >= 0");
  return u;
}

Action parse_action(const std::string& s, const std::string& where) {
  for (auto a : {Action::SliceControl, Action::UeControl, Action::TrafficChange, Action::UsersJoin,
                 Action::UsersLeave}) {
    if (to_string(a) == s) return a;
  }
  bad(where + ".action " + s + " is not an action");
}

}  // namespace

std::string_view to_string(Action a) {
  switch (a) {
    case Action::SliceControl: return "SliceControl";
    case Action::UeControl: return "UeControl";
    case Action::TrafficChange: return "TrafficChange";
    case Action::UsersJoin: return "UsersJoin";
    case Action::UsersLeave: return "UsersLeave";
  }
  return "SliceControl";
}

std::uint64_t Event::t_ms() const { return static_cast<std::uint64_t>(std::llround(t_s * 1000.0)); }

const UeSpec& Scenario::ue(UeId id) const {
  for (const auto& u : ues) {
    if (u.ue_id == id) return u;
  }
  bad("unknown ue " + std::to_string(id.value));
}

bool Scenario::has_slice(SliceId id) const {
  return std::any_of(slices.begin(), slices.end(), [&](const auto& s) { return s.config.slice_id == id; });
}

std::vector<UeId> event_ues(const Event& e) {
  const std::string where = std::string(to_string(e.action)) + ".params";
  std::vector<UeId> out;
  if (e.params.contains("ue_id")) out.push_back(UeId(field<std::uint32_t>(e.params, "ue_id", 0, where)));
  for (auto id : field(e.params, "ue_ids", std::vector<std::uint32_t>{}, where)) out.push_back(UeId(id));
  if (out.empty()) bad(where + " names no UE");
  return out;
}

double event_rate(const Event& e) {
  const auto mbps = required<double>(e.params, "mbps", "TrafficChange.params");
  if (mbps < 0.0) bad("TrafficChange.params.mbps must be >= 0");
  return mbps;
}

fs::SliceUpdate slice_update(const Event& e) {
  const std::string where = "SliceControl.params";
  only_keys(e.params, {"slice_id", "state", "dedicated_rb", "prioritized_rb", "shared_priority", "fd_scheduler"},
            where);
  fs::SliceUpdate u;
  u.slice_id = SliceId(required<std::uint32_t>(e.params, "slice_id", where));
  if (e.params.contains("state")) u.state = state_field(e.params, "state", fs::SliceState::Shared, where);
  if (e.params.contains("dedicated_rb")) u.dedicated_rb = field(e.params, "dedicated_rb", 0, where);
  if (e.params.contains("prioritized_rb")) u.prioritized_rb = field(e.params, "prioritized_rb", 0, where);
  if (e.params.contains("shared_priority")) u.shared_priority = field(e.params, "shared_priority", 1, where);
  if (e.params.contains("fd_scheduler")) u.fd_scheduler = field<std::string>(e.params, "fd_scheduler", "", where);
  return u;
}

fs::UeUpdate ue_update(const Event& e) {
  const std::string where = "UeControl.params";
  only_keys(e.params, {"ue_id", "drb_id", "bearer_priority"}, where);
  fs::UeUpdate u;
  u.ue_id = UeId(required<std::uint32_t>(e.params, "ue_id", where));
  if (e.params.contains("drb_id")) u.drb_id = DrbId(field<std::uint32_t>(e.params, "drb_id", 0, where));
  u.bearer_priority = required<int>(e.params, "bearer_priority", where);
  if (u.bearer_priority < 1) bad(where + ".bearer_priority must be >= 1");
  return u;
}

Scenario parse_scenario(const json& doc) {
  only_keys(doc, {"name", "duration_s", "seed", "cells", "arrival_jitter", "slices", "ues", "events"}, "scenario");
  Scenario s;
  s.name = field<std::string>(doc, "name", "", "scenario");
  s.duration_s = required<double>(doc, "duration_s", "scenario");
  s.seed = field<std::uint64_t>(doc, "seed", 1, "scenario");
  s.arrival_jitter = field(doc, "arrival_jitter", 0.0, "scenario");
  if (!(s.duration_s > 0.0)) bad("scenario.duration_s must be positive");
  if (s.arrival_jitter < 0.0 || s.arrival_jitter >= 1.0) bad("scenario.arrival_jitter must be in [0, 1)");

  const auto cells = field(doc, "cells", json::array(), "scenario");
  if (cells.size() > 1) bad("scenario.cells: only single-cell scenarios are supported");
  if (cells.size() == 1) s.cell = parse_cell(cells[0]);

  const auto slices = field(doc, "slices", json::array(), "scenario");
  for (std::size_t i = 0; i < slices.size(); ++i) {
    auto spec = parse_slice(slices[i], "slices[" + std::to_string(i) + "]");
    if (s.has_slice(spec.config.slice_id)) bad("duplicate slice " + std::to_string(spec.config.slice_id.value));
    s.slices.push_back(std::move(spec));
  }
  const auto ues = field(doc, "ues", json::array(), "scenario");
  std::set<std::uint32_t> ue_ids;
  std::set<std::uint32_t> drb_ids;
  for (std::size_t i = 0; i < ues.size(); ++i) {
    const std::string where = "ues[" + std::to_string(i) + "]";
    auto u = parse_ue(ues[i], where);
    if (!s.has_slice(u.slice_id)) bad(where + ".slice_id is not a declared slice");
    if (!ue_ids.insert(u.ue_id.value).second) bad(where + ": duplicate ue_id");
    if (!drb_ids.insert(u.drb_id.value).second) bad(where + ": duplicate drb_id");
    s.ues.push_back(u);
  }

  const auto events = field(doc, "events", json::array(), "scenario");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string where = "events[" + std::to_string(i) + "]";
    only_keys(events[i], {"t", "action", "params"}, where);
    Event e;
    e.t_s = required<double>(events[i], "t", where);
    e.action = parse_action(required<std::string>(events[i], "action", where), where);
    e.params = field(events[i], "params", json::object(), where);
    if (e.t_s < 0.0 || e.t_s > s.duration_s) bad(where + ".t must lie in [0, duration_s]");
    switch (e.action) {
      case Action::SliceControl:
        if (!s.has_slice(slice_update(e).slice_id)) bad(where + ": unknown slice");
        break;
      case Action::UeControl:
        s.ue(ue_update(e).ue_id);
        break;
      case Action::TrafficChange:
        only_keys(e.params, {"ue_id", "ue_ids", "mbps"}, where + ".params");
        for (auto id : event_ues(e)) s.ue(id);
        event_rate(e);
        break;
      case Action::UsersJoin:
      case Action::UsersLeave:
        only_keys(e.params, {"ue_id", "ue_ids"}, where + ".params");
        for (auto id : event_ues(e)) s.ue(id);
        break;
    }
    s.events.push_back(std::move(e));
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const Event& a, const Event& b) { return a.t_ms() < b.t_ms(); });
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    bad(path + ": " + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace hexsim::scenario
