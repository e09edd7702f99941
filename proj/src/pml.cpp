#include "hexsim/pml.hpp"

#include <algorithm>

namespace hexsim::pml {

nanoseconds monotonic_now() {
  static const auto epoch = Clock::now();
  return std::chrono::duration_cast<nanoseconds>(Clock::now() - epoch);
}

void LockoutRegistry::set_window(milliseconds window) {
  window_ns_.store(std::chrono::duration_cast<nanoseconds>(std::max(window, milliseconds(0))).count());
}

milliseconds LockoutRegistry::window() const {
  return std::chrono::duration_cast<milliseconds>(nanoseconds(window_ns_.load()));
}

void LockoutRegistry::prune(nanoseconds at) {
  const nanoseconds window(window_ns_.load());
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (at - it->second.last_write >= window) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

LockoutGrant LockoutRegistry::acquire(const std::string& caller,
                                      const std::vector<std::string>& paths, nanoseconds at) {
  LockoutGrant grant;
  grant.caller = caller;
  grant.at = at;
  const nanoseconds window(window_ns_.load());

  std::lock_guard lock(mu_);
  prune(at);
  for (const auto& p : paths) {
    auto it = entries_.find(p);
    if (it == entries_.end() || it->second.last_writer == caller) continue;
    const auto gap = at >= it->second.last_write ? at - it->second.last_write
                                                 : it->second.last_write - at;
    if (gap < window) {
      grant.blocked_path = p;
      return grant;
    }
  }
  for (const auto& p : paths) {
    auto it = entries_.find(p);
    grant.previous.emplace_back(p, it == entries_.end() ? std::nullopt
                                                        : std::optional<LockoutEntry>(it->second));
    if (window.count() > 0) entries_[p] = LockoutEntry{caller, at};
  }
  grant.granted = true;
  return grant;
}

void LockoutRegistry::rollback(const LockoutGrant& grant) {
  if (!grant.granted) return;
  std::lock_guard lock(mu_);
  for (const auto& [path, previous] : grant.previous) {
    auto it = entries_.find(path);
    if (it == entries_.end() || it->second.last_writer != grant.caller ||
        it->second.last_write != grant.at) {
      continue;
    }
    if (previous) {
      it->second = *previous;
    } else {
      entries_.erase(it);
    }
  }
}

std::optional<LockoutEntry> LockoutRegistry::entry(const std::string& path) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(path);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t LockoutRegistry::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

Pml::Pml(milliseconds lockout_window) : lockout_(lockout_window) {}

Pml::~Pml() {
  std::vector<Worker*> all;
  {
    std::lock_guard lock(registry_mu_);
    for (auto& [_, w] : workers_) all.push_back(w.get());
  }
  for (auto* w : all) {
    {
      std::lock_guard lock(w->mu);
      w->stop = true;
    }
    w->cv.notify_all();
  }
  for (auto* w : all) {
    if (w->thread.joinable()) w->thread.join();
  }
}

void Pml::register_plugin(PluginManifest manifest) {
  std::lock_guard lock(registry_mu_);
  if (std::find(plugins_.begin(), plugins_.end(), manifest.plugin_id) != plugins_.end()) {
    throw Error(Errc::DuplicateApi, "plugin " + manifest.plugin_id + " already registered");
  }
  for (std::size_t i = 0; i < manifest.apis.size(); ++i) {
    const auto& id = manifest.apis[i].api_id;
    if (id.empty() || !manifest.apis[i].handler) {
      throw Error(Errc::InvalidInput, "api definition needs an id and a handler");
    }
    if (workers_.contains(id)) throw Error(Errc::DuplicateApi, "api " + id + " already registered");
    for (std::size_t j = 0; j < i; ++j) {
      if (manifest.apis[j].api_id == id) throw Error(Errc::DuplicateApi, "api " + id + " listed twice");
    }
  }
  plugins_.push_back(manifest.plugin_id);
  for (auto& def : manifest.apis) {
    auto w = std::make_unique<Worker>();
    w->cost_ns.store(def.execution_cost.count());
    w->def = std::move(def);
    auto* raw = w.get();
    const auto id = raw->def.api_id;
    workers_.emplace(id, std::move(w));
    raw->thread = std::thread([this, raw] { run_worker(*raw); });
  }
}

bool Pml::has_plugin(const std::string& plugin_id) const {
  std::lock_guard lock(registry_mu_);
  return std::find(plugins_.begin(), plugins_.end(), plugin_id) != plugins_.end();
}

bool Pml::has_api(const std::string& api_id) const {
  std::lock_guard lock(registry_mu_);
  return workers_.contains(api_id);
}

std::vector<std::string> Pml::api_ids() const {
  std::lock_guard lock(registry_mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : workers_) out.push_back(id);
  return out;
}

void Pml::set_execution_cost(const std::string& api_id, nanoseconds cost) {
  std::lock_guard lock(registry_mu_);
  auto it = workers_.find(api_id);
  if (it == workers_.end()) throw Error(Errc::UnknownApi, api_id);
  it->second->cost_ns.store(cost.count());
}

std::uint64_t Pml::invoke(ApiCall call, Completion done) {
  if (call.call_id == 0) call.call_id = next_call_id_.fetch_add(1);
  const auto id = call.call_id;
  Worker* w = nullptr;
  {
    std::lock_guard lock(registry_mu_);
    auto it = workers_.find(call.api_id);
    if (it != workers_.end()) w = it->second.get();
  }
  if (w == nullptr) {
    if (done) done(call, ApiResult{Errc::UnknownApi, "unknown api " + call.api_id, {}});
    return id;
  }
  in_flight_.fetch_add(1);
  {
    std::lock_guard lock(w->mu);
    if (call.arrival_time.count() == 0) call.arrival_time = monotonic_now();
    call.arrival_time = std::max(call.arrival_time, w->last_arrival);
    w->last_arrival = call.arrival_time;
    w->queue.push_back(Pending{std::move(call), std::move(done)});
  }
  w->cv.notify_one();
  return id;
}

std::future<ApiResult> Pml::invoke(ApiCall call) {
  auto promise = std::make_shared<std::promise<ApiResult>>();
  auto future = promise->get_future();
  invoke(std::move(call), [promise](const ApiCall&, const ApiResult& r) { promise->set_value(r); });
  return future;
}

void Pml::drain() {
  std::unique_lock lock(drain_mu_);
  drain_cv_.wait(lock, [this] { return in_flight_.load() == 0; });
}

void Pml::finish_one() {
  if (in_flight_.fetch_sub(1) == 1) {
    std::lock_guard lock(drain_mu_);
    drain_cv_.notify_all();
  }
}

ApiResult Pml::execute(Worker& w, const ApiCall& call) {
  std::vector<std::string> paths = call.parameter_paths;
  if (paths.empty() && w.def.paths) {
    try {
      paths = w.def.paths(call);
    } catch (const std::exception& e) {
      return ApiResult{Errc::ValidationFailed, e.what(), {}};
    }
  }
  LockoutGrant grant;
  if (w.def.writes && !paths.empty()) {
    grant = lockout_.acquire(call.caller_id, paths, call.arrival_time);
    if (!grant.granted) {
      return ApiResult{Errc::LockedOut, "parameter " + grant.blocked_path + " locked", {}};
    }
  }
  const nanoseconds cost(w.cost_ns.load());
  if (cost.count() > 0) std::this_thread::sleep_for(cost);

  ApiResult result;
  try {
    result.value = w.def.handler(call);
  } catch (const Error& e) {
    result.error = e.code();
    result.message = e.what();
  } catch (const std::exception& e) {
    result.error = Errc::ValidationFailed;
    result.message = e.what();
  }
  if (!result.ok()) lockout_.rollback(grant);
  return result;
}

void Pml::run_worker(Worker& w) {
  for (;;) {
    Pending next;
    {
      std::unique_lock lock(w.mu);
      w.cv.wait(lock, [&] { return w.stop || !w.queue.empty(); });
      if (w.queue.empty()) return;
      next = std::move(w.queue.front());
      w.queue.pop_front();
    }
    const auto result = execute(w, next.call);
    if (next.done) next.done(next.call, result);
    finish_one();
  }
}

}  // namespace hexsim::pml
