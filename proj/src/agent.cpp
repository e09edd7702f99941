#include "hexsim/agent.hpp"

#include <algorithm>

#include "hexsim/error.hpp"

namespace hexsim::agent {

std::string_view to_string(ExecutionMode m) {
  switch (m) {
    case ExecutionMode::Decoupled: return "decoupled";
    case ExecutionMode::Serialized: return "serialized";
    case ExecutionMode::FrameGated: return "frame_gated";
  }
  return "decoupled";
}

std::string_view to_string(PeerKind k) { return k == PeerKind::Ric ? "ric" : "smo"; }

namespace {

std::string_view to_string(FunctionKind k) { return k == FunctionKind::Ran ? "ran" : "oam"; }

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedConfig, what); }

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) malformed(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      malformed("unknown field " + where + "." + key);
    }
  }
}

FunctionSpec parse_function(const json& j) {
  only_keys(j, {"ran_function_id", "name", "kind", "required_plugins", "ha_plugin", "resources"},
            "functions[]");
  FunctionSpec f;
  f.ran_function_id = j.at("ran_function_id").get<std::uint32_t>();
  f.name = j.value("name", "function-" + std::to_string(f.ran_function_id));
  const auto kind = j.value("kind", std::string("ran"));
  if (kind == "ran") {
    f.kind = FunctionKind::Ran;
  } else if (kind == "oam") {
    f.kind = FunctionKind::Oam;
  } else {
    malformed("function kind must be ran or oam");
  }
  f.required_plugins = j.value("required_plugins", std::vector<std::string>{});
  f.ha_plugin = j.at("ha_plugin").get<std::string>();
  f.resources = j.value("resources", std::vector<std::string>{});
  return f;
}

bool is_request_for(PeerKind kind, MsgType t) {
  if (kind == PeerKind::Smo) return t == MsgType::EditConfig;
  return t == MsgType::ControlRequest || t == MsgType::SubscriptionRequest ||
         t == MsgType::QueryRequest;
}

}  // namespace

AgentConfig parse_agent_config(const json& doc) {
  try {
    only_keys(doc,
              {"node_id", "functions", "plugins", "queue_depth", "manager_instances",
               "lockout_window_ms", "alarm_thresholds", "mode"},
              "config");
    AgentConfig c;
    c.node_id = doc.value("node_id", c.node_id);
    std::set<std::uint32_t> seen;
    for (const auto& f : doc.value("functions", json::array())) {
      c.functions.push_back(parse_function(f));
      if (!seen.insert(c.functions.back().ran_function_id).second) {
        malformed("duplicate ran_function_id " + std::to_string(c.functions.back().ran_function_id));
      }
    }
    c.plugins = doc.value("plugins", std::vector<std::string>{});
    c.queue_depth = doc.value("queue_depth", c.queue_depth);
    c.manager_instances = doc.value("manager_instances", c.manager_instances);
    c.lockout_window_ms = doc.value("lockout_window_ms", c.lockout_window_ms);
    if (doc.contains("alarm_thresholds")) {
      const auto& a = doc.at("alarm_thresholds");
      only_keys(a, {"hu_utilization"}, "alarm_thresholds");
      c.utilization_alarm_threshold = a.value("hu_utilization", c.utilization_alarm_threshold);
    }
    const auto mode = doc.value("mode", std::string("decoupled"));
    if (mode == "decoupled") {
      c.mode = ExecutionMode::Decoupled;
    } else if (mode == "serialized") {
      c.mode = ExecutionMode::Serialized;
    } else if (mode == "frame_gated") {
      c.mode = ExecutionMode::FrameGated;
    } else {
      malformed("unknown mode " + mode);
    }
    if (c.queue_depth == 0 || c.manager_instances == 0 || c.lockout_window_ms < 0) {
      malformed("queue_depth and manager_instances must be positive, lockout_window_ms non-negative");
    }
    return c;
  } catch (const json::exception& e) {
    malformed(e.what());
  }
}

std::vector<FunctionEntry> load_configuration(const AgentConfig& config, const pml::Pml& pml,
                                              const Plugins& plugins) {
  auto enabled = [&](const std::string& name) {
    return config.plugins.empty() ||
           std::find(config.plugins.begin(), config.plugins.end(), name) != config.plugins.end();
  };
  auto have_plugin = [&](const FunctionSpec& f) {
    if (f.kind == FunctionKind::Ran) {
      return std::any_of(plugins.service_models.begin(), plugins.service_models.end(),
                         [&](const auto& p) { return p->name() == f.ha_plugin; });
    }
    return std::any_of(plugins.config.begin(), plugins.config.end(),
                       [&](const auto& p) { return p->name() == f.ha_plugin; });
  };

  std::vector<FunctionEntry> out;
  for (const auto& f : config.functions) {
    FunctionEntry e{f, true, ""};
    for (const auto& p : f.required_plugins) {
      if (!pml.has_plugin(p)) {
        e.available = false;
        e.reason = "MissingPlugin: " + p;
        break;
      }
    }
    if (e.available && (!have_plugin(f) || !enabled(f.ha_plugin))) {
      e.available = false;
      e.reason = "MissingHaPlugin: " + f.ha_plugin;
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct Agent::Ticket {
  Agent* agent;
  ~Ticket() { agent->release_ticket(); }
};

struct Agent::Session {
  std::string peer_id;
  PeerKind kind = PeerKind::Ric;
  std::shared_ptr<transport::Channel> channel;
  std::uint32_t setup_corr = 0;
  std::promise<ActivationSet> setup;
  bool setup_settled = false;  // reader thread only
  bool setup_done = false;     // reader thread only
  std::atomic<bool> active{false};
  std::set<std::uint32_t> activated;  // repo_mu_
  std::thread reader;
  std::promise<void> closed;
  std::shared_future<void> closed_future = closed.get_future().share();
};

struct Agent::Subscription {
  std::uint64_t sub_id = 0;
  std::weak_ptr<Session> session;
  std::string ric_id;
  std::uint32_t ran_function_id = 0;
  std::shared_ptr<ServiceModelPlugin> plugin;
  json request;
  std::any registration;
  bool confirmed = false;
  std::uint64_t sent = 0;
  std::uint64_t failed = 0;
};

Agent::ManagerPool::ManagerPool(std::string name, std::size_t instances, std::size_t depth,
                                std::function<void(Work&)> handler)
    : name_(std::move(name)) {
  for (std::size_t i = 0; i < instances; ++i) queues_.push_back(std::make_unique<BoundedQueue<Work>>(depth));
  for (std::size_t i = 0; i < instances; ++i) {
    threads_.emplace_back([q = queues_[i].get(), handler] {
      while (auto work = q->pop()) handler(*work);
    });
  }
}

Agent::ManagerPool::~ManagerPool() { stop(); }

bool Agent::ManagerPool::submit(const std::string& shard_key, Work&& work) {
  const auto i = std::hash<std::string>{}(shard_key) % queues_.size();
  return queues_[i]->try_push(std::move(work));
}

void Agent::ManagerPool::stop() {
  for (auto& q : queues_) q->stop();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

Agent::Agent(pml::Pml& pml, const json& config_doc, Plugins plugins)
    : Agent(pml, parse_agent_config(config_doc), std::move(plugins)) {}

Agent::Agent(pml::Pml& pml, AgentConfig config, Plugins plugins)
    : pml_(pml),
      config_(std::move(config)),
      plugins_(std::move(plugins)),
      telemetry_queue_(config_.queue_depth) {
  if (config_.mode == ExecutionMode::Serialized) config_.manager_instances = 1;
  pml_.lockout().set_window(pml::milliseconds(config_.lockout_window_ms));
  catalog_ = load_configuration(config_, pml_, plugins_);
  for (const auto& e : catalog_) {
    if (!e.available || e.spec.kind != FunctionKind::Ran) continue;
    if (auto sm = sm_plugin(e.spec.ha_plugin)) sm->bind_function(e.spec.ran_function_id);
  }
  start_managers();
}

Agent::~Agent() {
  stopping_.store(true);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(sessions_mu_);
    all = all_sessions_;
  }
  for (auto& s : all) s->channel->close();
  for (auto& s : all) {
    if (s->reader.joinable()) s->reader.join();
  }
  control_->stop();
  subscription_->stop();
  query_->stop();
  broker_->stop();
  // Completions and deregistrations still queued in the PML reference this agent.
  pml_.drain();
  pml_.drain();
  telemetry_queue_.stop();
  if (telemetry_thread_.joinable()) telemetry_thread_.join();
}

void Agent::start_managers() {
  const auto n = config_.manager_instances;
  const auto depth = config_.queue_depth;
  control_ = std::make_unique<ManagerPool>("control", n, depth, [this](Work& w) {
    if (w.stage == Stage::ConfigApply) {
      handle_config_apply(w);
    } else {
      handle_control(w);
    }
  });
  subscription_ = std::make_unique<ManagerPool>("subscription", n, depth,
                                                [this](Work& w) { handle_subscription(w); });
  query_ = std::make_unique<ManagerPool>("query", n, depth, [this](Work& w) { handle_query(w); });
  broker_ = std::make_unique<ManagerPool>("data-broker", 1, depth, [this](Work& w) { handle_edit_config(w); });
  telemetry_thread_ = std::thread([this] { telemetry_loop(); });
}

std::vector<FunctionEntry> Agent::catalog() const {
  std::lock_guard lock(repo_mu_);
  return catalog_;
}

Agent::TicketPtr Agent::make_ticket() {
  {
    std::lock_guard lock(idle_mu_);
    ++pending_;
  }
  return TicketPtr(new Ticket{this});
}

void Agent::release_ticket() {
  std::lock_guard lock(idle_mu_);
  if (--pending_ == 0) idle_cv_.notify_all();
}

bool Agent::wait_idle(std::chrono::milliseconds timeout) {
  std::unique_lock lock(idle_mu_);
  return idle_cv_.wait_for(lock, timeout, [this] { return pending_ == 0; });
}

// ---- Interface Manager: sessions and setup ------------------------------

std::future<ActivationSet> Agent::connect(const std::string& peer_id, PeerKind kind,
                                          std::unique_ptr<transport::Channel> channel) {
  auto session = std::make_shared<Session>();
  session->peer_id = peer_id;
  session->kind = kind;
  session->channel = std::move(channel);
  session->setup_corr = next_setup_corr_.fetch_add(1);
  auto future = session->setup.get_future();

  json functions = json::array();
  {
    std::lock_guard lock(repo_mu_);
    for (const auto& e : catalog_) {
      if (!e.available) continue;
      if ((kind == PeerKind::Ric) != (e.spec.kind == FunctionKind::Ran)) continue;
      functions.push_back({{"ran_function_id", e.spec.ran_function_id},
                           {"name", e.spec.name},
                           {"kind", to_string(e.spec.kind)}});
    }
  }
  try {
    session->channel->send(Frame{MsgType::SetupRequest, session->setup_corr,
                                 {{"node_id", config_.node_id}, {"functions", functions}}});
  } catch (const Error& e) {
    session->setup.set_exception(std::make_exception_ptr(Error(Errc::Unreachable, e.what())));
    return future;
  }
  {
    std::lock_guard lock(sessions_mu_);
    all_sessions_.push_back(session);
    session->reader = std::thread([this, session] { reader_loop(session); });
  }
  return future;
}

ActivationSet Agent::setup_with_ric(const std::string& ric_id, const std::string& host,
                                    std::uint16_t port, std::chrono::milliseconds timeout) {
  auto future = connect(ric_id, PeerKind::Ric, transport::tcp_connect(host, port));
  if (future.wait_for(timeout) != std::future_status::ready) {
    std::lock_guard lock(sessions_mu_);
    for (auto& s : all_sessions_) {
      if (s->peer_id == ric_id && !s->active.load()) s->channel->close();
    }
    throw Error(Errc::Unreachable, "no SetupResponse from " + ric_id);
  }
  return future.get();
}

std::uint16_t Agent::listen(std::uint16_t port, const std::string& host) {
  listener_ = std::make_unique<transport::TcpListener>(port, host);
  accept_thread_ = std::thread([this] {
    while (!stopping_.load()) {
      if (auto ch = listener_->accept(std::chrono::milliseconds(50))) {
        connect("", PeerKind::Ric, std::move(ch));
      }
    }
  });
  return listener_->port();
}

void Agent::disconnect(const std::string& peer_id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(repo_mu_);
    auto it = sessions_.find(peer_id);
    if (it == sessions_.end()) return;
    s = it->second;
  }
  s->channel->close();
  s->closed_future.wait();
}

bool Agent::is_connected(const std::string& peer_id) const {
  std::lock_guard lock(repo_mu_);
  return sessions_.contains(peer_id);
}

void Agent::reader_loop(const std::shared_ptr<Session>& session) {
  for (;;) {
    std::optional<Frame> frame;
    try {
      frame = session->channel->receive(std::chrono::milliseconds(100));
    } catch (const std::exception& e) {
      teardown(session, e.what());
      return;
    }
    if (!frame) continue;
    const auto received = pml::monotonic_now();
    if (!session->setup_done) {
      if (frame->msg_type == MsgType::SetupResponse && frame->correlation_id == session->setup_corr) {
        complete_setup(session, *frame);
        if (!session->setup_done) {
          teardown(session, "setup rejected");
          return;
        }
      } else if (e2lite::is_inbound_request(frame->msg_type)) {
        send_failure(session, *frame, "NotActivated", "E2 setup has not completed");
      }
      continue;
    }
    on_frame(session, std::move(*frame), received);
  }
}

void Agent::complete_setup(const std::shared_ptr<Session>& session, const Frame& response) {
  auto reject = [&](const std::string& why) {
    session->setup_settled = true;
    session->setup.set_exception(std::make_exception_ptr(Error(Errc::SetupRejected, why)));
  };
  const auto& p = response.payload;
  if (!p.is_object()) return reject("SetupResponse payload must be an object");
  if (p.contains("rejected")) return reject(p["rejected"].dump());
  if (session->peer_id.empty()) {
    if (!p.contains("peer_id") || !p["peer_id"].is_string()) return reject("SetupResponse needs peer_id");
    session->peer_id = p["peer_id"].get<std::string>();
    if (p.value("peer_kind", std::string("ric")) == "smo") session->kind = PeerKind::Smo;
  }
  std::vector<std::uint32_t> requested;
  try {
    requested = p.at("accepted").get<std::vector<std::uint32_t>>();
  } catch (const json::exception&) {
    return reject("SetupResponse.accepted must list function ids");
  }

  ActivationSet set;
  set.peer_id = session->peer_id;
  {
    std::lock_guard lock(repo_mu_);
    if (sessions_.contains(session->peer_id)) return reject("peer " + session->peer_id + " already connected");
    for (auto id : requested) {
      const auto* f = find_function(id);
      const bool kind_ok = f && ((session->kind == PeerKind::Ric) == (f->spec.kind == FunctionKind::Ran));
      if (!f || !f->available || !kind_ok) {
        set.refused.emplace_back(id, "NotOffered");
        continue;
      }
      const auto clash = std::find_if(f->spec.resources.begin(), f->spec.resources.end(), [&](const auto& r) {
        auto it = resource_owner_.find(r);
        return it != resource_owner_.end() && it->second != session->peer_id;
      });
      if (clash != f->spec.resources.end()) {
        set.refused.emplace_back(id, "ResourceLockedByOther: " + *clash);
        continue;
      }
      for (const auto& r : f->spec.resources) resource_owner_[r] = session->peer_id;
      session->activated.insert(id);
      set.activated.push_back(id);
    }
    sessions_[session->peer_id] = session;
    session->active.store(true);
  }
  session->setup_done = true;
  session->setup_settled = true;
  session->setup.set_value(std::move(set));
}

void Agent::teardown(const std::shared_ptr<Session>& session, const std::string& why) {
  std::vector<std::shared_ptr<Subscription>> dropped;
  {
    std::lock_guard lock(repo_mu_);
    auto it = sessions_.find(session->peer_id);
    if (it != sessions_.end() && it->second == session) sessions_.erase(it);
    if (session->active.load()) {
      std::erase_if(resource_owner_, [&](const auto& kv) { return kv.second == session->peer_id; });
    }
    for (auto sit = subscriptions_.begin(); sit != subscriptions_.end();) {
      if (sit->second->session.lock() == session) {
        dropped.push_back(sit->second);
        sit = subscriptions_.erase(sit);
      } else {
        ++sit;
      }
    }
    session->activated.clear();
    session->active.store(false);
  }
  session->channel->close();
  if (!session->setup_settled) {
    session->setup_settled = true;
    session->setup.set_exception(std::make_exception_ptr(Error(Errc::Unreachable, why)));
  }
  for (const auto& sub : dropped) {
    if (!sub->registration.has_value()) continue;
    auto action = sub->plugin->unsubscribe_action(sub->registration);
    pml::ApiCall call;
    call.api_id = action.api_id;
    call.caller_id = session->peer_id;
    call.payload = std::move(action.payload);
    pml_.invoke(std::move(call), nullptr);
  }
  session->closed.set_value();
}

void Agent::send(const std::shared_ptr<Session>& session, const Frame& frame) {
  try {
    session->channel->send(frame);
    responses_sent_.fetch_add(1);
  } catch (const Error&) {
    // The peer is gone; the reader thread tears the session down.
  }
}

void Agent::send_failure(const std::shared_ptr<Session>& session, const Frame& request,
                         std::string_view cause, const std::string& detail) {
  json body{{"ok", false}, {"cause", cause}, {"detail", detail}};
  MsgType type = MsgType::ControlFailure;
  switch (request.msg_type) {
    case MsgType::SubscriptionRequest: type = MsgType::SubscriptionResponse; break;
    case MsgType::QueryRequest: type = MsgType::QueryResponse; break;
    case MsgType::EditConfig: type = MsgType::ConfigAck; break;
    default: break;
  }
  if (request.msg_type == MsgType::ControlRequest) count_failed();
  send(session, Frame{type, request.correlation_id, std::move(body)});
}

void Agent::on_frame(const std::shared_ptr<Session>& session, Frame frame, nanoseconds received) {
  const auto type = frame.msg_type;
  if (!e2lite::is_known(type)) {
    send_failure(session, frame, "UnknownType",
                 "message type " + std::to_string(static_cast<int>(type)));
    return;
  }
  if (!is_request_for(session->kind, type)) {
    send_failure(session, frame, "InvalidDirection",
                 std::string(e2lite::to_string(type)) + " is not accepted from a " +
                     std::string(to_string(session->kind)));
    return;
  }
  Work work;
  work.session = session;
  work.timing = MessageTiming{session->peer_id, type, frame.correlation_id, received, {}, {}};
  work.frame = std::move(frame);
  work.ticket = make_ticket();
  if (type == MsgType::ControlRequest) {
    std::lock_guard lock(metrics_mu_);
    ++counters_.received;
  }
  ManagerPool* pool = nullptr;
  switch (type) {
    case MsgType::ControlRequest: work.stage = Stage::Control; pool = control_.get(); break;
    case MsgType::SubscriptionRequest: work.stage = Stage::Subscription; pool = subscription_.get(); break;
    case MsgType::QueryRequest: work.stage = Stage::Query; pool = query_.get(); break;
    default: work.stage = Stage::Broker; pool = broker_.get(); break;
  }
  work.timing.dispatch_time = pml::monotonic_now();
  if (!pool->submit(session->peer_id, std::move(work))) {
    send_failure(session, work.frame, "Overloaded", "manager queue full");
    raise_alarm({{"condition", "queue_overflow"}, {"peer_id", session->peer_id},
                 {"msg_type", e2lite::to_string(type)}});
  }
}

// ---- Functional managers -------------------------------------------------

const FunctionEntry* Agent::find_function(std::uint32_t id) const {
  for (const auto& e : catalog_) {
    if (e.spec.ran_function_id == id) return &e;
  }
  return nullptr;
}

std::shared_ptr<ServiceModelPlugin> Agent::sm_plugin(const std::string& name) const {
  for (const auto& p : plugins_.service_models) {
    if (p->name() == name) return p;
  }
  return nullptr;
}

std::shared_ptr<ConfigPlugin> Agent::config_plugin(const std::string& name) const {
  for (const auto& p : plugins_.config) {
    if (p->name() == name) return p;
  }
  return nullptr;
}

std::uint32_t Agent::check_activation(const Session& session, const json& payload,
                                      const char* id_field) const {
  if (!payload.is_object() || !payload.contains(id_field) || !payload[id_field].is_number_unsigned()) {
    throw Error(Errc::SchemaViolation, std::string("payload needs an unsigned ") + id_field);
  }
  const auto id = payload[id_field].get<std::uint32_t>();
  if (find_function(id) == nullptr) throw Error(Errc::UnknownFunction, "ran function " + std::to_string(id));
  if (!session.activated.contains(id)) {
    throw Error(Errc::NotActivated, "function " + std::to_string(id) + " not activated for " + session.peer_id);
  }
  return id;
}

void Agent::record_timing(const MessageTiming& t) {
  std::lock_guard lock(metrics_mu_);
  timings_.push_back(t);
}

void Agent::count_failed() {
  std::lock_guard lock(metrics_mu_);
  ++counters_.failed;
}

void Agent::handle_control(Work& work) {
  ActionCall action;
  try {
    std::shared_ptr<ServiceModelPlugin> sm;
    std::uint32_t fn = 0;
    {
      std::lock_guard lock(repo_mu_);
      fn = check_activation(*work.session, work.frame.payload, "ran_function_id");
      sm = sm_plugin(find_function(fn)->spec.ha_plugin);
    }
    action = sm->control_action(fn, work.frame.payload);
    std::lock_guard lock(repo_mu_);
    for (const auto& r : action.resources) {
      auto it = resource_owner_.find(r);
      if (it != resource_owner_.end() && it->second != work.session->peer_id) {
        throw Error(Errc::ResourceLockedByOther, r + " is held by " + it->second);
      }
    }
  } catch (const Error& e) {
    send_failure(work.session, work.frame, to_string(e.code()), e.what());
    return;
  } catch (const std::exception& e) {
    send_failure(work.session, work.frame, to_string(Errc::SchemaViolation), e.what());
    return;
  }

  switch (config_.mode) {
    case ExecutionMode::Decoupled:
      invoke_control(std::move(work), std::move(action));
      break;
    case ExecutionMode::Serialized:
      invoke_control(std::move(work), std::move(action)).wait();
      break;
    case ExecutionMode::FrameGated: {
      std::optional<std::pair<Work, ActionCall>> overwritten;
      {
        std::lock_guard lock(gate_mu_);
        overwritten.swap(gated_);
        work.ticket.reset();
        gated_.emplace(std::move(work), std::move(action));
      }
      if (overwritten) {
        send_failure(overwritten->first.session, overwritten->first.frame, to_string(Errc::Overwritten),
                     "replaced by a newer control before the next frame");
      }
      break;
    }
  }
}

std::future<void> Agent::invoke_control(Work work, ActionCall action) {
  auto done = std::make_shared<std::promise<void>>();
  auto future = done->get_future();
  work.timing.invoke_time = pml::monotonic_now();
  record_timing(work.timing);

  pml::ApiCall call;
  call.api_id = action.api_id;
  call.caller_id = work.session->peer_id;
  call.payload = std::move(action.payload);
  pml_.invoke(std::move(call), [this, session = work.session, request = Frame{work.frame.msg_type, work.frame.correlation_id, {}},
                                ticket = work.ticket, done](const pml::ApiCall&, const pml::ApiResult& r) {
    if (r.ok()) {
      {
        std::lock_guard lock(metrics_mu_);
        ++counters_.executed;
      }
      send(session, Frame{MsgType::ControlAck, request.correlation_id, {{"ok", true}}});
    } else {
      send_failure(session, request, to_string(*r.error), r.message);
    }
    done->set_value();
  });
  return future;
}

void Agent::on_tti(std::uint64_t tti_index) {
  if (config_.mode != ExecutionMode::FrameGated || tti_index % kTtisPerFrame != 0) return;
  std::optional<std::pair<Work, ActionCall>> next;
  {
    std::lock_guard lock(gate_mu_);
    next.swap(gated_);
  }
  if (!next) return;
  next->first.ticket = make_ticket();
  invoke_control(std::move(next->first), std::move(next->second));
}

void Agent::handle_subscription(Work& work) {
  auto sub = std::make_shared<Subscription>();
  ActionCall action;
  try {
    {
      std::lock_guard lock(repo_mu_);
      sub->ran_function_id = check_activation(*work.session, work.frame.payload, "ran_function_id");
      sub->plugin = sm_plugin(find_function(sub->ran_function_id)->spec.ha_plugin);
      sub->sub_id = next_sub_id_++;
      sub->session = work.session;
      sub->ric_id = work.session->peer_id;
      sub->request = work.frame.payload;
      subscriptions_[sub->sub_id] = sub;
    }
    std::weak_ptr<Session> weak = work.session;
    const auto sub_id = sub->sub_id;
    const auto corr = work.frame.correlation_id;
    const auto fn = sub->ran_function_id;
    action = sub->plugin->subscription_action(fn, work.frame.payload,
                                              [this, weak, sub_id, corr, fn](const json& report) {
                                                if (auto s = weak.lock()) deliver_report(s, sub_id, corr, fn, report);
                                              });
  } catch (const std::exception& e) {
    if (sub->sub_id != 0) {
      std::lock_guard lock(repo_mu_);
      subscriptions_.erase(sub->sub_id);
    }
    const auto* err = dynamic_cast<const Error*>(&e);
    send_failure(work.session, work.frame, to_string(err ? err->code() : Errc::SchemaViolation), e.what());
    return;
  }

  pml::ApiCall call;
  call.api_id = action.api_id;
  call.caller_id = work.session->peer_id;
  call.payload = std::move(action.payload);
  pml_.invoke(std::move(call), [this, session = work.session, request = Frame{work.frame.msg_type, work.frame.correlation_id, {}},
                                ticket = work.ticket, sub](const pml::ApiCall&, const pml::ApiResult& r) {
    if (!r.ok()) {
      {
        std::lock_guard lock(repo_mu_);
        subscriptions_.erase(sub->sub_id);
      }
      send_failure(session, request, to_string(*r.error), r.message);
      return;
    }
    bool orphaned = false;
    {
      std::lock_guard lock(repo_mu_);
      sub->registration = r.value;
      orphaned = !subscriptions_.contains(sub->sub_id) || !session->active.load();
    }
    if (orphaned) {
      auto undo = sub->plugin->unsubscribe_action(r.value);
      pml::ApiCall c;
      c.api_id = undo.api_id;
      c.caller_id = session->peer_id;
      c.payload = std::move(undo.payload);
      pml_.invoke(std::move(c), nullptr);
      return;
    }
    send(session, Frame{MsgType::SubscriptionResponse, request.correlation_id, {{"ok", true}, {"sub_id", sub->sub_id}}});
    std::lock_guard lock(repo_mu_);
    sub->confirmed = true;
  });
}

void Agent::deliver_report(const std::shared_ptr<Session>& session, std::uint64_t sub_id,
                           std::uint32_t correlation_id, std::uint32_t ran_function_id, const json& report) {
  bool overflow = false;
  {
    std::lock_guard lock(repo_mu_);
    auto it = subscriptions_.find(sub_id);
    if (it == subscriptions_.end() || !it->second->confirmed) return;
    Outbound out{session,
                 Frame{MsgType::Indication, correlation_id,
                       {{"sub_id", sub_id}, {"ran_function_id", ran_function_id}, {"report", report}}},
                 sub_id, make_ticket()};
    if (!telemetry_queue_.try_push(std::move(out))) {
      ++it->second->failed;
      overflow = true;
    }
  }
  if (overflow) {
    raise_alarm({{"condition", "subscription_delivery_failure"}, {"sub_id", sub_id}, {"reason", "telemetry queue full"}});
  }
}

void Agent::telemetry_loop() {
  while (auto out = telemetry_queue_.pop()) {
    bool ok = true;
    try {
      out->session->channel->send(out->frame);
    } catch (const Error&) {
      ok = false;
    }
    {
      std::lock_guard lock(repo_mu_);
      auto it = subscriptions_.find(out->sub_id);
      if (it != subscriptions_.end()) ++(ok ? it->second->sent : it->second->failed);
    }
    if (!ok) {
      raise_alarm({{"condition", "subscription_delivery_failure"}, {"sub_id", out->sub_id}, {"reason", "send failed"}});
    }
  }
}

void Agent::handle_query(Work& work) {
  ActionCall action;
  std::shared_ptr<ServiceModelPlugin> sm;
  try {
    std::uint32_t fn = 0;
    {
      std::lock_guard lock(repo_mu_);
      fn = check_activation(*work.session, work.frame.payload, "ran_function_id");
      sm = sm_plugin(find_function(fn)->spec.ha_plugin);
    }
    action = sm->query_action(fn, work.frame.payload);
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    send_failure(work.session, work.frame, to_string(err ? err->code() : Errc::SchemaViolation), e.what());
    return;
  }
  pml::ApiCall call;
  call.api_id = action.api_id;
  call.caller_id = work.session->peer_id;
  call.payload = std::move(action.payload);
  pml_.invoke(std::move(call), [this, session = work.session, request = work.frame, ticket = work.ticket,
                                sm](const pml::ApiCall&, const pml::ApiResult& r) {
    if (!r.ok()) {
      send_failure(session, request, to_string(*r.error), r.message);
      return;
    }
    json report;
    try {
      report = sm->encode_query_result(request.payload, r.value);
    } catch (const std::exception& e) {
      send_failure(session, request, to_string(Errc::SchemaViolation), e.what());
      return;
    }
    send(session, Frame{MsgType::QueryResponse, request.correlation_id, {{"ok", true}, {"report", report}}});
  });
}

// ---- Data Broker and OAM configuration ------------------------------------

void Agent::handle_edit_config(Work& work) {
  const auto& p = work.frame.payload;
  try {
    std::shared_ptr<ConfigPlugin> plugin;
    std::uint32_t fn = 0;
    {
      std::lock_guard lock(repo_mu_);
      fn = check_activation(*work.session, p, "ran_function_id");
      plugin = config_plugin(find_function(fn)->spec.ha_plugin);
    }
    if (!p.contains("config") || !p["config"].is_object()) {
      throw Error(Errc::ValidationFailed, "EditConfig needs a config object");
    }
    plugin->validate(p["config"]);
    const auto key = std::to_string(fn);
    {
      std::lock_guard lock(repo_mu_);
      auto& slot = ran_state_["config"][key];
      work.committed_before = slot;
      if (slot.is_null()) slot = json::object();
      slot.merge_patch(p["config"]);
    }
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    send_failure(work.session, work.frame, to_string(err ? err->code() : Errc::ValidationFailed), e.what());
    return;
  }
  // Commit notification to the Control Manager.
  work.stage = Stage::ConfigApply;
  const auto peer = work.session->peer_id;
  if (!control_->submit(peer, std::move(work))) {
    {
      std::lock_guard lock(repo_mu_);
      ran_state_["config"][std::to_string(p["ran_function_id"].get<std::uint32_t>())] = work.committed_before;
    }
    send_failure(work.session, work.frame, "Overloaded", "control manager queue full");
  }
}

void Agent::handle_config_apply(Work& work) {
  const auto fn = work.frame.payload["ran_function_id"].get<std::uint32_t>();
  ActionCall action;
  try {
    std::shared_ptr<ConfigPlugin> plugin;
    {
      std::lock_guard lock(repo_mu_);
      plugin = config_plugin(find_function(fn)->spec.ha_plugin);
    }
    action = plugin->config_action(work.frame.payload["config"]);
  } catch (const std::exception& e) {
    {
      std::lock_guard lock(repo_mu_);
      ran_state_["config"][std::to_string(fn)] = work.committed_before;
    }
    send_failure(work.session, work.frame, to_string(Errc::ValidationFailed), e.what());
    return;
  }
  pml::ApiCall call;
  call.api_id = action.api_id;
  call.caller_id = work.session->peer_id;
  call.payload = std::move(action.payload);
  call.parameter_paths = action.resources;
  pml_.invoke(std::move(call), [this, session = work.session, request = Frame{work.frame.msg_type, work.frame.correlation_id, {}},
                                ticket = work.ticket, fn, before = work.committed_before](const pml::ApiCall&,
                                                                                         const pml::ApiResult& r) {
    if (!r.ok()) {
      {
        std::lock_guard lock(repo_mu_);
        ran_state_["config"][std::to_string(fn)] = before;
      }
      send_failure(session, request, to_string(*r.error), r.message);
      return;
    }
    send(session, Frame{MsgType::ConfigAck, request.correlation_id, {{"ok", true}}});
  });
}

// ---- Alarm Manager --------------------------------------------------------

void Agent::report_utilization(const std::string& hu_id, double utilization) {
  bool raise = false;
  {
    std::lock_guard lock(repo_mu_);
    const bool high = utilization > config_.utilization_alarm_threshold;
    auto& was = utilization_high_[hu_id];
    raise = high && !was;
    was = high;
  }
  if (raise) {
    raise_alarm({{"condition", "hu_utilization"},
                 {"hu_id", hu_id},
                 {"utilization", utilization},
                 {"threshold", config_.utilization_alarm_threshold}});
  }
}

void Agent::raise_alarm(json condition) {
  std::vector<std::shared_ptr<Session>> smos;
  {
    std::lock_guard lock(repo_mu_);
    alarms_.push_back(condition);
    for (const auto& [_, s] : sessions_) {
      if (s->kind == PeerKind::Smo) smos.push_back(s);
    }
  }
  for (const auto& s : smos) send(s, Frame{MsgType::AlarmNotification, 0, condition});
}

// ---- Repository views -----------------------------------------------------

std::vector<std::uint32_t> Agent::activated_functions(const std::string& peer_id) const {
  std::lock_guard lock(repo_mu_);
  auto it = sessions_.find(peer_id);
  if (it == sessions_.end()) return {};
  return {it->second->activated.begin(), it->second->activated.end()};
}

std::set<std::string> Agent::locks_held(const std::string& peer_id) const {
  std::lock_guard lock(repo_mu_);
  std::set<std::string> out;
  for (const auto& [r, owner] : resource_owner_) {
    if (owner == peer_id) out.insert(r);
  }
  return out;
}

std::vector<SubscriptionInfo> Agent::subscriptions(const std::string& peer_id) const {
  std::lock_guard lock(repo_mu_);
  std::vector<SubscriptionInfo> out;
  for (const auto& [id, s] : subscriptions_) {
    if (s->ric_id != peer_id || !s->confirmed) continue;
    out.push_back({id, s->ric_id, s->ran_function_id, s->request, s->sent, s->failed});
  }
  return out;
}

json Agent::ran_state() const {
  std::lock_guard lock(repo_mu_);
  return ran_state_;
}

std::vector<json> Agent::alarms() const {
  std::lock_guard lock(repo_mu_);
  return alarms_;
}

ControlCounters Agent::control_counters() const {
  std::lock_guard lock(metrics_mu_);
  return counters_;
}

std::vector<MessageTiming> Agent::take_timings() {
  std::lock_guard lock(metrics_mu_);
  return std::exchange(timings_, {});
}

}  // namespace hexsim::agent
