#pragma once

// Programmable Mediation Layer: plugin/API registry with per-API FIFO
// execution and per-parameter write lockout.

#include <any>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hexsim/error.hpp"

namespace hexsim::pml {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;
using std::chrono::nanoseconds;

// Monotonic time since an arbitrary process-wide epoch.
nanoseconds monotonic_now();

struct ApiCall {
  std::uint64_t call_id = 0;
  std::string api_id;
  std::string caller_id;
  std::any payload;
  nanoseconds arrival_time{0};  // zero means "stamp on invoke"
  std::vector<std::string> parameter_paths;
};

struct ApiResult {
  std::optional<Errc> error;
  std::string message;
  std::any value;

  bool ok() const { return !error.has_value(); }
};

using ApiHandler = std::function<std::any(const ApiCall&)>;  // throws Error on failure
using PathExtractor = std::function<std::vector<std::string>(const ApiCall&)>;
using Completion = std::function<void(const ApiCall&, const ApiResult&)>;

struct ApiDefinition {
  std::string api_id;
  ApiHandler handler;
  bool writes = false;           // write APIs are subject to lockout
  PathExtractor paths;           // used when a call carries no parameter_paths
  nanoseconds execution_cost{0};  // modeled action cost, spent before the handler
};

struct PluginManifest {
  std::string plugin_id;
  std::vector<ApiDefinition> apis;
  std::vector<std::string> parameter_paths;  // path prefixes governed by the plugin
};

struct LockoutEntry {
  std::string last_writer;
  nanoseconds last_write{0};
};

struct LockoutGrant {
  bool granted = false;
  std::string blocked_path;
  std::string caller;
  nanoseconds at{0};
  std::vector<std::pair<std::string, std::optional<LockoutEntry>>> previous;
};

class LockoutRegistry {
 public:
  explicit LockoutRegistry(milliseconds window = milliseconds(100)) { set_window(window); }

  void set_window(milliseconds window);
  milliseconds window() const;

  // Denied when any path was written by a different caller less than one
  // window away from `at`. A granted acquisition records the write at once.
  LockoutGrant acquire(const std::string& caller, const std::vector<std::string>& paths,
                       nanoseconds at);
  // Restores the entries replaced by `grant` (used when the write then fails).
  void rollback(const LockoutGrant& grant);

  std::optional<LockoutEntry> entry(const std::string& path) const;
  std::size_t size() const;

 private:
  void prune(nanoseconds at);

  mutable std::mutex mu_;
  std::atomic<std::int64_t> window_ns_{0};
  std::map<std::string, LockoutEntry> entries_;
};

class Pml {
 public:
  explicit Pml(milliseconds lockout_window = milliseconds(100));
  ~Pml();
  Pml(const Pml&) = delete;
  Pml& operator=(const Pml&) = delete;

  // Throws Error(DuplicateApi) when any api_id is already registered.
  void register_plugin(PluginManifest manifest);
  bool has_plugin(const std::string& plugin_id) const;
  bool has_api(const std::string& api_id) const;
  std::vector<std::string> api_ids() const;

  // Queues the call on its API's FIFO; `done` runs on the API worker (or
  // inline for UnknownApi). Returns the assigned call id.
  std::uint64_t invoke(ApiCall call, Completion done);
  std::future<ApiResult> invoke(ApiCall call);

  // Blocks until every queued call has completed.
  void drain();
  std::size_t in_flight() const { return in_flight_.load(); }

  LockoutRegistry& lockout() { return lockout_; }
  void set_execution_cost(const std::string& api_id, nanoseconds cost);

 private:
  struct Pending {
    ApiCall call;
    Completion done;
  };
  struct Worker {
    ApiDefinition def;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Pending> queue;
    nanoseconds last_arrival{0};
    std::atomic<std::int64_t> cost_ns{0};
    bool stop = false;
    std::thread thread;
  };

  void run_worker(Worker& w);
  ApiResult execute(Worker& w, const ApiCall& call);
  void finish_one();

  mutable std::mutex registry_mu_;
  std::map<std::string, std::unique_ptr<Worker>> workers_;
  std::vector<std::string> plugins_;
  LockoutRegistry lockout_;
  std::atomic<std::uint64_t> next_call_id_{1};
  std::atomic<std::size_t> in_flight_{0};
  std::mutex drain_mu_;
  std::condition_variable drain_cv_;
};

}  // namespace hexsim::pml
