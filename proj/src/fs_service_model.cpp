#include "hexsim/fs_service_model.hpp"

#include <limits>

#include "hexsim/error.hpp"

namespace hexsim::sm {

std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::SliceContext: return "slice_context";
    case ReportKind::UeContext: return "ue_context";
    case ReportKind::ContextChange: return "context_change";
  }
  return "slice_context";
}

namespace {

[[noreturn]] void violation(const std::string& what) { throw Error(Errc::SchemaViolation, what); }

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) violation(std::string("missing ") + key);
  return obj.at(key);
}

std::int64_t integer(const json& v, const std::string& field, std::int64_t min,
                     std::int64_t max = std::numeric_limits<std::int32_t>::max()) {
  if (!v.is_number_integer()) violation(field + " must be an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(max)) {
    violation(field + " out of range");
  }
  const auto x = v.get<std::int64_t>();
  if (x < min || x > max) violation(field + " out of range");
  return x;
}

std::uint32_t function_id(const json& payload) {
  return static_cast<std::uint32_t>(
      integer(require(payload, "ran_function_id"), "ran_function_id", 0,
              std::numeric_limits<std::uint32_t>::max()));
}

std::vector<std::uint32_t> id_list(const json& v, const std::string& field) {
  if (!v.is_array()) violation(field + " must be an array");
  std::vector<std::uint32_t> out;
  for (const auto& e : v) {
    out.push_back(static_cast<std::uint32_t>(
        integer(e, field, 0, std::numeric_limits<std::uint32_t>::max())));
  }
  return out;
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) violation(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) violation("unexpected field " + where + "." + key);
  }
}

ReportKind report_kind(const json& payload) {
  const auto& v = require(payload, "report");
  if (!v.is_string()) violation("report must be a string");
  const auto s = v.get<std::string>();
  for (auto k : {ReportKind::SliceContext, ReportKind::UeContext, ReportKind::ContextChange}) {
    if (s == to_string(k)) return k;
  }
  violation("unknown report " + s);
}

fs::Targets targets_of(const json& payload, ReportKind kind) {
  fs::Targets t;
  if (!payload.contains("targets")) return t;
  const auto& v = payload.at("targets");
  only_keys(v, {"slices", "ues"}, "targets");
  std::vector<std::uint32_t> slices, ues;
  if (v.contains("slices")) slices = id_list(v.at("slices"), "targets.slices");
  if (v.contains("ues")) ues = id_list(v.at("ues"), "targets.ues");
  if (kind == ReportKind::UeContext && !slices.empty()) violation("ue_context report targets UEs only");
  if (kind != ReportKind::UeContext && !ues.empty()) violation(std::string(to_string(kind)) + " report targets slices only");
  for (auto id : slices) t.slices.emplace_back(id);
  for (auto id : ues) t.ues.emplace_back(id);
  return t;
}

fs::SliceUpdate slice_params(SliceId id, const json& params) {
  only_keys(params,
            {"state", "dedicated_rb", "prioritized_rb", "shared_priority", "fd_scheduler",
             "hu_associations"},
            "params");
  if (params.empty()) violation("SliceConfig needs at least one parameter");
  fs::SliceUpdate u;
  u.slice_id = id;
  if (params.contains("state")) {
    const auto& v = params.at("state");
    if (!v.is_string()) violation("state must be a string");
    const auto state = fs::parse_slice_state(v.get<std::string>());
    if (!state) violation("unknown state " + v.get<std::string>());
    u.state = *state;
  }
  if (params.contains("dedicated_rb")) {
    u.dedicated_rb = static_cast<int>(integer(params.at("dedicated_rb"), "dedicated_rb", 0));
  }
  if (params.contains("prioritized_rb")) {
    u.prioritized_rb = static_cast<int>(integer(params.at("prioritized_rb"), "prioritized_rb", 0));
  }
  if (params.contains("shared_priority")) {
    u.shared_priority = static_cast<int>(integer(params.at("shared_priority"), "shared_priority", 1));
  }
  if (params.contains("fd_scheduler")) {
    const auto& v = params.at("fd_scheduler");
    if (!v.is_string() || v.get<std::string>().empty()) violation("fd_scheduler must be a name");
    u.fd_scheduler = v.get<std::string>();
  }
  if (params.contains("hu_associations")) {
    const auto& v = params.at("hu_associations");
    if (!v.is_array()) violation("hu_associations must be an array");
    std::set<std::string> hus;
    for (const auto& e : v) {
      if (!e.is_string()) violation("hu_associations entries must be strings");
      hus.insert(e.get<std::string>());
    }
    u.hu_associations = std::move(hus);
  }
  return u;
}

fs::UeUpdate ue_params(UeId id, const json& params) {
  only_keys(params, {"bearer_priority", "drb_id"}, "params");
  fs::UeUpdate u;
  u.ue_id = id;
  u.bearer_priority = static_cast<int>(integer(require(params, "bearer_priority"), "bearer_priority", 1));
  if (params.contains("drb_id")) {
    u.drb_id = DrbId(static_cast<std::uint32_t>(
        integer(params.at("drb_id"), "drb_id", 0, std::numeric_limits<std::uint32_t>::max())));
  }
  return u;
}

json slice_update_params(const fs::SliceUpdate& u) {
  json p = json::object();
  if (u.state) p["state"] = fs::to_string(*u.state);
  if (u.dedicated_rb) p["dedicated_rb"] = *u.dedicated_rb;
  if (u.prioritized_rb) p["prioritized_rb"] = *u.prioritized_rb;
  if (u.shared_priority) p["shared_priority"] = *u.shared_priority;
  if (u.fd_scheduler) p["fd_scheduler"] = *u.fd_scheduler;
  if (u.hu_associations) p["hu_associations"] = *u.hu_associations;
  return p;
}

}  // namespace

ControlPayload parse_control(const json& payload) {
  only_keys(payload, {"ran_function_id", "control_header", "control_message"}, "payload");
  ControlPayload out;
  out.ran_function_id = function_id(payload);

  const auto& header = require(payload, "control_header");
  only_keys(header, {"target", "ids"}, "control_header");
  const auto& target = require(header, "target");
  if (target == "slice") {
    out.header.target = ControlHeader::Target::Slice;
  } else if (target == "ue") {
    out.header.target = ControlHeader::Target::Ue;
  } else {
    violation("control_header.target must be \"slice\" or \"ue\"");
  }
  out.header.ids = id_list(require(header, "ids"), "control_header.ids");
  if (out.header.ids.empty()) violation("control_header.ids is empty");

  const auto& message = require(payload, "control_message");
  only_keys(message, {"routine", "params"}, "control_message");
  const auto& routine = require(message, "routine");
  const auto& params = require(message, "params");
  if (routine == "SliceConfig") {
    out.routine = Routine::SliceConfig;
    if (out.header.target != ControlHeader::Target::Slice) violation("SliceConfig targets slices");
    for (auto id : out.header.ids) out.request.slices.push_back(slice_params(SliceId(id), params));
  } else if (routine == "UeConfig") {
    out.routine = Routine::UeConfig;
    if (out.header.target != ControlHeader::Target::Ue) violation("UeConfig targets UEs");
    for (auto id : out.header.ids) out.request.ues.push_back(ue_params(UeId(id), params));
  } else {
    violation("control_message.routine must be SliceConfig or UeConfig");
  }
  return out;
}

SubscriptionPayload parse_subscription(const json& payload) {
  only_keys(payload, {"ran_function_id", "report", "targets", "trigger"}, "payload");
  SubscriptionPayload out;
  out.ran_function_id = function_id(payload);
  out.report = report_kind(payload);
  out.targets = targets_of(payload, out.report);

  const auto& trigger = require(payload, "trigger");
  only_keys(trigger, {"kind", "period_ms", "event"}, "trigger");
  const auto& kind = require(trigger, "kind");
  if (kind == "periodic") {
    out.trigger.kind = fs::TelemetryTrigger::Kind::Periodic;
    // Zero passes the schema; the FS plugin reports it as BadPeriod.
    out.trigger.period_ms = static_cast<std::uint32_t>(
        integer(require(trigger, "period_ms"), "trigger.period_ms", 0));
    if (out.report == ReportKind::ContextChange) violation("context_change reports are event triggered");
  } else if (kind == "event") {
    out.trigger.kind = fs::TelemetryTrigger::Kind::Event;
    const auto& event = require(trigger, "event");
    if (!event.is_string()) violation("trigger.event must be a string");
    out.trigger.event = event.get<std::string>();
    if (out.report != ReportKind::ContextChange) violation("event triggers deliver context_change reports");
  } else {
    violation("trigger.kind must be \"periodic\" or \"event\"");
  }
  return out;
}

QueryPayload parse_query(const json& payload) {
  only_keys(payload, {"ran_function_id", "report", "targets", "since"}, "payload");
  QueryPayload out;
  out.ran_function_id = function_id(payload);
  out.report = report_kind(payload);
  out.targets = targets_of(payload, out.report);
  if (payload.contains("since")) {
    out.since = static_cast<std::uint64_t>(
        integer(payload.at("since"), "since", 0, std::numeric_limits<std::int64_t>::max()));
  }
  return out;
}

json slice_config_control(std::uint32_t ran_function_id, const fs::SliceUpdate& update) {
  return json{{"ran_function_id", ran_function_id},
              {"control_header", {{"target", "slice"}, {"ids", {update.slice_id.value}}}},
              {"control_message", {{"routine", "SliceConfig"}, {"params", slice_update_params(update)}}}};
}

json ue_config_control(std::uint32_t ran_function_id, const fs::UeUpdate& update) {
  json params{{"bearer_priority", update.bearer_priority}};
  if (update.drb_id) params["drb_id"] = update.drb_id->value;
  return json{{"ran_function_id", ran_function_id},
              {"control_header", {{"target", "ue"}, {"ids", {update.ue_id.value}}}},
              {"control_message", {{"routine", "UeConfig"}, {"params", params}}}};
}

json subscription_request(std::uint32_t ran_function_id, ReportKind report,
                          const fs::Targets& targets, const fs::TelemetryTrigger& trigger) {
  json t{{"kind", trigger.kind == fs::TelemetryTrigger::Kind::Periodic ? "periodic" : "event"}};
  if (trigger.kind == fs::TelemetryTrigger::Kind::Periodic) {
    t["period_ms"] = trigger.period_ms;
  } else {
    t["event"] = trigger.event;
  }
  return json{{"ran_function_id", ran_function_id},
              {"report", to_string(report)},
              {"targets", targets},
              {"trigger", t}};
}

json query_request(std::uint32_t ran_function_id, ReportKind report, const fs::Targets& targets,
                   std::uint64_t since) {
  json q{{"ran_function_id", ran_function_id}, {"report", to_string(report)}, {"targets", targets}};
  if (report == ReportKind::ContextChange) q["since"] = since;
  return q;
}

json encode_report(ReportKind kind, const fs::ContextReport& report) {
  json out{{"kind", to_string(kind)}};
  if (kind == ReportKind::UeContext) {
    out["ues"] = report.ues;
  } else {
    out["slices"] = report.slices;
  }
  return out;
}

json encode_changes(const std::vector<fs::ContextChangeRecord>& changes) {
  return json{{"kind", to_string(ReportKind::ContextChange)}, {"changes", changes}};
}

FsServiceModelPlugin::FsServiceModelPlugin(UeSliceResolver resolver)
    : resolver_(std::move(resolver)) {}

void FsServiceModelPlugin::bind_function(std::uint32_t ran_function_id) {
  functions_.insert(ran_function_id);
}

void FsServiceModelPlugin::require_bound(std::uint32_t ran_function_id) const {
  if (!functions_.contains(ran_function_id)) {
    throw Error(Errc::UnknownFunction, "ran function " + std::to_string(ran_function_id));
  }
}

ControlPayload FsServiceModelPlugin::validate_sm_payload(std::uint32_t ran_function_id,
                                                         const json& payload) const {
  require_bound(ran_function_id);
  auto out = parse_control(payload);
  if (out.ran_function_id != ran_function_id) violation("ran_function_id does not match the request");
  return out;
}

agent::ActionCall FsServiceModelPlugin::control_action(std::uint32_t ran_function_id,
                                                       const json& payload) const {
  auto typed = validate_sm_payload(ran_function_id, payload);
  agent::ActionCall call;
  call.api_id = fs::kApiControl;
  std::set<std::string> resources;
  for (const auto& s : typed.request.slices) resources.insert("slice/" + std::to_string(s.slice_id.value));
  for (const auto& u : typed.request.ues) {
    if (!resolver_) {
      resources.insert("ue/" + std::to_string(u.ue_id.value));
      continue;
    }
    for (auto s : resolver_(u.ue_id)) resources.insert("slice/" + std::to_string(s.value));
  }
  call.resources.assign(resources.begin(), resources.end());
  call.payload = std::move(typed.request);
  return call;
}

agent::ActionCall FsServiceModelPlugin::subscription_action(std::uint32_t ran_function_id,
                                                            const json& payload,
                                                            agent::ReportDelivery deliver) const {
  require_bound(ran_function_id);
  const auto typed = parse_subscription(payload);
  if (typed.ran_function_id != ran_function_id) violation("ran_function_id does not match the request");

  fs::TelemetryRegistrationRequest req;
  req.targets = typed.targets;
  req.trigger = typed.trigger;
  const auto kind = typed.report;
  req.sink = [kind, deliver = std::move(deliver)](const fs::TelemetryEvent& ev) {
    json report = ev.report ? encode_report(kind, *ev.report) : encode_changes(ev.changes);
    report["t_ms"] = ev.t_ms;
    deliver(report);
  };
  agent::ActionCall call;
  call.api_id = fs::kApiTelemetryRegistration;
  call.payload = std::move(req);
  return call;
}

agent::ActionCall FsServiceModelPlugin::query_action(std::uint32_t ran_function_id,
                                                     const json& payload) const {
  require_bound(ran_function_id);
  const auto typed = parse_query(payload);
  if (typed.ran_function_id != ran_function_id) violation("ran_function_id does not match the request");
  agent::ActionCall call;
  if (typed.report == ReportKind::ContextChange) {
    call.api_id = fs::kApiContextChange;
    call.payload = typed.since;
  } else {
    call.api_id = fs::kApiStatistics;
    call.payload = typed.targets;
  }
  return call;
}

agent::ActionCall FsServiceModelPlugin::unsubscribe_action(const std::any& subscription_result) const {
  agent::ActionCall call;
  call.api_id = fs::kApiTelemetryDeregistration;
  call.payload = std::any_cast<std::uint64_t>(subscription_result);
  return call;
}

json FsServiceModelPlugin::encode_query_result(const json& query_payload, const std::any& value) const {
  const auto kind = parse_query(query_payload).report;
  if (kind == ReportKind::ContextChange) {
    return encode_changes(std::any_cast<const std::vector<fs::ContextChangeRecord>&>(value));
  }
  return encode_report(kind, std::any_cast<const fs::ContextReport&>(value));
}

void PmlConfigPlugin::validate(const json& doc) const {
  if (!doc.is_object() || doc.empty()) throw Error(Errc::ValidationFailed, "config must be a non-empty object");
  for (const auto& [key, v] : doc.items()) {
    if (key != "lockout_window_ms") throw Error(Errc::ValidationFailed, "unknown setting " + key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw Error(Errc::ValidationFailed, "lockout_window_ms must be a non-negative integer");
    }
  }
}

agent::ActionCall PmlConfigPlugin::config_action(const json& doc) const {
  validate(doc);
  return agent::ActionCall{fs::kApiPmlConfig, doc, {"pml/lockout_window"}};
}

}  // namespace hexsim::sm
