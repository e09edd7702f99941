#include "hexsim/fs_plugin.hpp"

#include "hexsim/error.hpp"

namespace hexsim::fs {

FsStore::FsStore(FsContext initial)
    : staged_(std::move(initial)), live_(staged_.config_copy()) {
  committed_ = std::make_shared<const Committed>(
      Committed{0, std::make_shared<const FsContext>(staged_.config_copy())});
  published_ = std::make_shared<const FsContext>(live_.config_copy());
}

void FsStore::mutate(const std::function<void(FsContext&)>& fn) {
  std::unique_lock writer(writer_mu_);
  FsContext scratch = staged_.config_copy();
  fn(scratch);
  auto records = scratch.changes_since(0);
  staged_.commit_transaction(std::move(scratch));
  const auto epoch = committed_epoch_.load() + 1;
  std::atomic_store(&committed_, std::make_shared<const Committed>(
                                     Committed{epoch, std::make_shared<const FsContext>(staged_.config_copy())}));
  committed_epoch_.store(epoch);

  // Listener order follows commit order: the listener lock is taken before
  // the writer lock is released.
  std::unique_lock listen(listener_mu_);
  writer.unlock();
  if (listener_ && !records.empty()) listener_(records);
}

void FsStore::on_tti_boundary() {
  const auto committed = std::atomic_load(&committed_);
  if (committed->epoch != live_epoch_) {
    live_.adopt_config(*committed->config);
    live_epoch_ = committed->epoch;
  }
  std::atomic_store(&published_, std::make_shared<const FsContext>(live_.config_copy()));
}

std::shared_ptr<const FsContext> FsStore::published() const {
  return std::atomic_load(&published_);
}

void FsStore::set_change_listener(ChangeListener listener) {
  std::lock_guard lock(listener_mu_);
  listener_ = std::move(listener);
}

std::vector<std::string> parameter_paths(const ControlRequest& req) {
  std::vector<std::string> out;
  for (const auto& s : req.slices) {
    const auto base = "slice/" + std::to_string(s.slice_id.value);
    if (s.state || s.dedicated_rb || s.prioritized_rb || s.shared_priority) out.push_back(base + "/rrc");
    if (s.fd_scheduler) out.push_back(base + "/scheduler");
    if (s.hu_associations) out.push_back(base + "/hu");
  }
  for (const auto& u : req.ues) {
    out.push_back("ue/" + std::to_string(u.ue_id.value) + "/bearer_priority");
  }
  return out;
}

FsPlugin::FsPlugin(FsStore& store, const fssf::AlgorithmRegistry& algorithms)
    : store_(store), algorithms_(algorithms) {
  store_.set_change_listener([this](const auto& records) { on_changes(records); });
}

pml::PluginManifest FsPlugin::manifest() {
  pml::PluginManifest m;
  m.plugin_id = kFsPluginId;
  m.parameter_paths = {"slice/", "ue/"};
  m.apis.push_back({kApiTelemetryRegistration,
                    [this](const pml::ApiCall& c) -> std::any {
                      return register_telemetry(std::any_cast<const TelemetryRegistrationRequest&>(c.payload));
                    },
                    false, {}, {}});
  m.apis.push_back({kApiTelemetryDeregistration,
                    [this](const pml::ApiCall& c) -> std::any {
                      deregister_telemetry(std::any_cast<std::uint64_t>(c.payload));
                      return true;
                    },
                    false, {}, {}});
  m.apis.push_back({kApiStatistics,
                    [this](const pml::ApiCall& c) -> std::any {
                      return statistics(std::any_cast<const Targets&>(c.payload));
                    },
                    false, {}, {}});
  m.apis.push_back({kApiContextChange,
                    [this](const pml::ApiCall& c) -> std::any {
                      return context_changes(std::any_cast<std::uint64_t>(c.payload));
                    },
                    false, {}, {}});
  m.apis.push_back({kApiControl,
                    [this](const pml::ApiCall& c) -> std::any {
                      control(std::any_cast<const ControlRequest&>(c.payload), c.caller_id);
                      return true;
                    },
                    true,
                    [](const pml::ApiCall& c) {
                      return parameter_paths(std::any_cast<const ControlRequest&>(c.payload));
                    },
                    {}});
  return m;
}

std::uint64_t FsPlugin::register_telemetry(const TelemetryRegistrationRequest& req) {
  if (req.trigger.kind == TelemetryTrigger::Kind::Periodic && req.trigger.period_ms == 0) {
    throw Error(Errc::BadPeriod, "period must be positive");
  }
  if (req.trigger.kind == TelemetryTrigger::Kind::Event && req.trigger.event != "context_change") {
    throw Error(Errc::InvalidInput, "unsupported event " + req.trigger.event);
  }
  store_.read_staged([&](const FsContext& ctx) {
    for (auto id : req.targets.slices) {
      if (!ctx.has_slice(id)) throw Error(Errc::UnknownId, "slice " + std::to_string(id.value));
    }
    for (auto id : req.targets.ues) {
      if (!ctx.has_ue(id)) throw Error(Errc::UnknownId, "ue " + std::to_string(id.value));
    }
    return 0;
  });
  std::lock_guard lock(reg_mu_);
  Registration r;
  r.id = next_reg_id_++;
  r.targets = req.targets;
  r.trigger = req.trigger;
  r.sink = req.sink;
  r.next_due_ms = now_ms_.load() + req.trigger.period_ms;
  registrations_.emplace(r.id, std::move(r));
  return next_reg_id_ - 1;
}

void FsPlugin::deregister_telemetry(std::uint64_t reg_id) {
  std::lock_guard lock(reg_mu_);
  registrations_.erase(reg_id);
}

std::size_t FsPlugin::registration_count() const {
  std::lock_guard lock(reg_mu_);
  return registrations_.size();
}

ContextReport FsPlugin::statistics(const Targets& targets) const {
  return store_.published()->snapshot(targets);
}

std::vector<ContextChangeRecord> FsPlugin::context_changes(std::uint64_t since) const {
  return store_.read_staged([&](const FsContext& ctx) { return ctx.changes_since(since); });
}

void FsPlugin::control(const ControlRequest& req, const std::string& caller) {
  for (const auto& s : req.slices) {
    if (s.fd_scheduler && !algorithms_.contains(*s.fd_scheduler)) {
      throw Error(Errc::ValidationFailed, "unknown scheduler " + *s.fd_scheduler);
    }
  }
  const Trigger trigger{"FS Control Request", caller};
  store_.mutate([&](FsContext& ctx) {
    for (const auto& u : req.slices) {
      if (!ctx.has_slice(u.slice_id)) {
        throw Error(Errc::UnknownId, "slice " + std::to_string(u.slice_id.value));
      }
      const auto& s = ctx.slice(u.slice_id);
      if (u.state || u.dedicated_rb || u.prioritized_rb || u.shared_priority) {
        const SliceState target = u.state.value_or(s.state);
        const SliceState reference = s.state == SliceState::Idle ? s.default_active_state : s.state;
        RadioResourceConfig rrc = s.rrc;
        if (u.state && target != reference && target != SliceState::Idle) {
          rrc.dedicated_rb = 0;
          rrc.prioritized_rb = 0;
        }
        if (u.dedicated_rb) rrc.dedicated_rb = *u.dedicated_rb;
        if (u.prioritized_rb) rrc.prioritized_rb = *u.prioritized_rb;
        if (u.shared_priority) rrc.shared_priority = *u.shared_priority;
        ctx.request_state_change(u.slice_id, target, rrc, trigger);
      }
      if (u.fd_scheduler) ctx.set_scheduler(u.slice_id, *u.fd_scheduler, trigger);
      if (u.hu_associations) ctx.set_hu_associations(u.slice_id, *u.hu_associations, trigger);
    }
    for (const auto& u : req.ues) {
      if (!ctx.has_ue(u.ue_id)) throw Error(Errc::UnknownId, "ue " + std::to_string(u.ue_id.value));
      std::vector<DrbId> drbs = ctx.ue(u.ue_id).bearers;
      if (u.drb_id) {
        if (!ctx.has_drb(*u.drb_id) || ctx.bearer(*u.drb_id).ue_id != u.ue_id) {
          throw Error(Errc::UnknownId, "drb " + std::to_string(u.drb_id->value));
        }
        drbs = {*u.drb_id};
      }
      for (auto drb : drbs) ctx.set_bearer_priority(drb, u.bearer_priority, trigger);
    }
  });
}

void FsPlugin::on_changes(const std::vector<ContextChangeRecord>& records) {
  std::vector<std::pair<std::uint64_t, TelemetrySink>> sinks;
  std::vector<std::vector<ContextChangeRecord>> batches;
  {
    std::lock_guard lock(reg_mu_);
    for (const auto& [id, r] : registrations_) {
      if (r.trigger.kind != TelemetryTrigger::Kind::Event) continue;
      std::vector<ContextChangeRecord> matched;
      for (const auto& rec : records) {
        const bool wanted = r.targets.slices.empty() ||
                            std::find(r.targets.slices.begin(), r.targets.slices.end(), rec.slice_id) !=
                                r.targets.slices.end();
        if (wanted) matched.push_back(rec);
      }
      if (matched.empty()) continue;
      sinks.emplace_back(id, r.sink);
      batches.push_back(std::move(matched));
    }
  }
  for (std::size_t i = 0; i < sinks.size(); ++i) {
    if (!sinks[i].second) continue;
    TelemetryEvent ev;
    ev.reg_id = sinks[i].first;
    ev.t_ms = now_ms_.load();
    ev.changes = std::move(batches[i]);
    sinks[i].second(ev);
  }
}

void FsPlugin::on_tti(std::uint64_t now_ms) {
  store_.on_tti_boundary();
  now_ms_.store(now_ms);

  std::vector<Registration> due;
  {
    std::unique_lock lock(reg_mu_, std::try_to_lock);
    if (!lock.owns_lock()) return;
    for (auto& [_, r] : registrations_) {
      if (r.trigger.kind != TelemetryTrigger::Kind::Periodic || r.next_due_ms > now_ms) continue;
      due.push_back(r);
      while (r.next_due_ms <= now_ms) r.next_due_ms += r.trigger.period_ms;
    }
  }
  if (due.empty()) return;
  const auto snapshot = store_.published();
  for (const auto& r : due) {
    if (!r.sink) continue;
    TelemetryEvent ev;
    ev.reg_id = r.id;
    ev.t_ms = now_ms;
    try {
      ev.report = snapshot->snapshot(r.targets);
    } catch (const Error&) {
      continue;
    }
    r.sink(ev);
  }
}

pml::PluginManifest admin_manifest(pml::Pml& pml) {
  pml::PluginManifest m;
  m.plugin_id = kAdminPluginId;
  m.parameter_paths = {"pml/"};
  m.apis.push_back({kApiPmlConfig,
                    [&pml](const pml::ApiCall& c) -> std::any {
                      const auto& doc = std::any_cast<const json&>(c.payload);
                      if (doc.contains("lockout_window_ms")) {
                        const auto& v = doc["lockout_window_ms"];
                        if (!v.is_number_integer() || v.get<long>() < 0) {
                          throw Error(Errc::ValidationFailed, "lockout_window_ms must be a non-negative integer");
                        }
                        pml.lockout().set_window(pml::milliseconds(v.get<long>()));
                      }
                      return true;
                    },
                    true,
                    [](const pml::ApiCall&) { return std::vector<std::string>{"pml/lockout_window"}; },
                    {}});
  return m;
}

}  // namespace hexsim::fs
