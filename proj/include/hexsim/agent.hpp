#pragma once

// HexRAN Agent: interface terminations, global managers (Configuration,
// Interface, Data Broker with the HA repository) and functional managers
// (Subscription, Telemetry, Control, Query, Alarm) dispatching into plugins
// and the PML.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hexsim/bounded_queue.hpp"
#include "hexsim/e2lite.hpp"
#include "hexsim/ha_plugin.hpp"
#include "hexsim/pml.hpp"
#include "hexsim/transport.hpp"

namespace hexsim::agent {

using e2lite::Frame;
using e2lite::MsgType;
using pml::nanoseconds;

// Decoupled is the agent proper. Serialized and FrameGated are reference
// degradations: one control manager that waits for each action to finish
// before taking the next message, and one pending control slot executed
// once per 10-TTI frame with overwrite.
enum class ExecutionMode { Decoupled, Serialized, FrameGated };
std::string_view to_string(ExecutionMode m);

enum class FunctionKind { Ran, Oam };
enum class PeerKind { Ric, Smo };
std::string_view to_string(PeerKind k);

inline constexpr std::uint64_t kTtisPerFrame = 10;

struct FunctionSpec {
  std::uint32_t ran_function_id = 0;
  std::string name;
  FunctionKind kind = FunctionKind::Ran;
  std::vector<std::string> required_plugins;  // PML plugin ids
  std::string ha_plugin;                      // service-model or config plugin name
  std::vector<std::string> resources;         // governed resource keys, e.g. "slice/1"
};

struct AgentConfig {
  std::string node_id = "hu-1";
  std::vector<FunctionSpec> functions;
  std::vector<std::string> plugins;  // enabled HA plugins; empty enables every registered one
  std::size_t queue_depth = 1024;
  std::size_t manager_instances = 2;
  int lockout_window_ms = 100;
  double utilization_alarm_threshold = 0.90;
  ExecutionMode mode = ExecutionMode::Decoupled;
};

// Throws Error(MalformedConfig).
AgentConfig parse_agent_config(const json& doc);

struct FunctionEntry {
  FunctionSpec spec;
  bool available = false;
  std::string reason;  // why unavailable
};

struct Plugins {
  std::vector<std::shared_ptr<ServiceModelPlugin>> service_models;
  std::vector<std::shared_ptr<ConfigPlugin>> config;
};

// Dependency verification: a function is available only when every required
// PML plugin is registered and its HA plugin is present and enabled.
std::vector<FunctionEntry> load_configuration(const AgentConfig& config, const pml::Pml& pml,
                                              const Plugins& plugins);

struct ActivationSet {
  std::string peer_id;
  std::vector<std::uint32_t> activated;
  std::vector<std::pair<std::uint32_t, std::string>> refused;
};

struct MessageTiming {
  std::string peer_id;
  MsgType msg_type = MsgType::ControlRequest;
  std::uint32_t correlation_id = 0;
  nanoseconds receive_time{0};
  nanoseconds dispatch_time{0};
  nanoseconds invoke_time{0};
};

struct ControlCounters {
  std::uint64_t received = 0;
  std::uint64_t executed = 0;
  std::uint64_t failed = 0;
};

struct SubscriptionInfo {
  std::uint64_t sub_id = 0;
  std::string ric_id;
  std::uint32_t ran_function_id = 0;
  json request;
  std::uint64_t sent = 0;
  std::uint64_t failed = 0;
};

class Agent {
 public:
  Agent(pml::Pml& pml, AgentConfig config, Plugins plugins);
  Agent(pml::Pml& pml, const json& config_doc, Plugins plugins);
  ~Agent();
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const AgentConfig& config() const { return config_; }
  std::vector<FunctionEntry> catalog() const;

  // Sends a SetupRequest over `channel` and activates the functions accepted
  // in the SetupResponse. The future fails with SetupRejected or Unreachable.
  std::future<ActivationSet> connect(const std::string& peer_id, PeerKind kind,
                                     std::unique_ptr<transport::Channel> channel);
  // Connects over TCP and waits for the setup to finish.
  ActivationSet setup_with_ric(const std::string& ric_id, const std::string& host,
                               std::uint16_t port, std::chrono::milliseconds timeout);
  // Accepts peers on a TCP endpoint; each SetupResponse must name its peer_id.
  std::uint16_t listen(std::uint16_t port, const std::string& host = "127.0.0.1");
  // Closes the session and waits until its locks and subscriptions are gone.
  void disconnect(const std::string& peer_id);
  bool is_connected(const std::string& peer_id) const;

  // TTI driver hook; FrameGated mode executes its pending control on frame
  // boundaries.
  void on_tti(std::uint64_t tti_index);
  // Raises an alarm when `utilization` crosses the configured threshold upward.
  void report_utilization(const std::string& hu_id, double utilization);

  // Blocks until every received request has been answered (FrameGated's
  // parked control excepted) and every queued report has been sent.
  bool wait_idle(std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

  // Repository views.
  std::vector<std::uint32_t> activated_functions(const std::string& peer_id) const;
  std::set<std::string> locks_held(const std::string& peer_id) const;
  std::vector<SubscriptionInfo> subscriptions(const std::string& peer_id) const;
  json ran_state() const;
  std::vector<json> alarms() const;

  ControlCounters control_counters() const;
  std::vector<MessageTiming> take_timings();
  std::uint64_t responses_sent() const { return responses_sent_.load(); }

 private:
  struct Session;
  struct Work;
  struct Subscription;
  struct Ticket;
  using TicketPtr = std::shared_ptr<Ticket>;

  enum class Stage { Control, Subscription, Query, Broker, ConfigApply };

  struct Work {
    Stage stage = Stage::Control;
    std::shared_ptr<Session> session;
    Frame frame;
    MessageTiming timing;
    TicketPtr ticket;
    json committed_before;  // ConfigApply: repository value to restore on failure
  };

  struct Outbound {
    std::shared_ptr<Session> session;
    Frame frame;
    std::uint64_t sub_id = 0;
    TicketPtr ticket;
  };

  class ManagerPool {
   public:
    ManagerPool(std::string name, std::size_t instances, std::size_t depth,
                std::function<void(Work&)> handler);
    ~ManagerPool();
    // Leaves `work` untouched when the instance queue is full.
    bool submit(const std::string& shard_key, Work&& work);
    void stop();

   private:
    std::string name_;
    std::vector<std::unique_ptr<BoundedQueue<Work>>> queues_;
    std::vector<std::thread> threads_;
  };

  TicketPtr make_ticket();
  void release_ticket();

  void start_managers();
  void reader_loop(const std::shared_ptr<Session>& session);
  void complete_setup(const std::shared_ptr<Session>& session, const Frame& response);
  void teardown(const std::shared_ptr<Session>& session, const std::string& why);

  // Interface Manager
  void on_frame(const std::shared_ptr<Session>& session, Frame frame, nanoseconds received);
  void send(const std::shared_ptr<Session>& session, const Frame& frame);
  void send_failure(const std::shared_ptr<Session>& session, const Frame& request,
                    std::string_view cause, const std::string& detail);

  // Functional managers
  void handle_control(Work& work);
  void handle_subscription(Work& work);
  void handle_query(Work& work);
  void handle_edit_config(Work& work);
  void handle_config_apply(Work& work);
  std::future<void> invoke_control(Work work, ActionCall action);
  void deliver_report(const std::shared_ptr<Session>& session, std::uint64_t sub_id,
                      std::uint32_t correlation_id, std::uint32_t ran_function_id, const json& report);
  void telemetry_loop();
  void raise_alarm(json condition);

  // Repository helpers (repo_mu_ held by caller)
  const FunctionEntry* find_function(std::uint32_t id) const;
  std::shared_ptr<ServiceModelPlugin> sm_plugin(const std::string& name) const;
  std::shared_ptr<ConfigPlugin> config_plugin(const std::string& name) const;
  std::uint32_t check_activation(const Session& session, const json& payload,
                                 const char* id_field) const;

  void record_timing(const MessageTiming& t);
  void count_failed();

  pml::Pml& pml_;
  AgentConfig config_;
  Plugins plugins_;

  // HA repository (Data Broker owned)
  mutable std::mutex repo_mu_;
  std::vector<FunctionEntry> catalog_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::string> resource_owner_;
  std::map<std::uint64_t, std::shared_ptr<Subscription>> subscriptions_;
  json ran_state_ = json::object();
  std::uint64_t next_sub_id_ = 1;
  std::vector<json> alarms_;
  std::map<std::string, bool> utilization_high_;

  std::mutex sessions_mu_;  // session threads lifecycle
  std::vector<std::shared_ptr<Session>> all_sessions_;
  std::atomic<std::uint32_t> next_setup_corr_{1};

  std::unique_ptr<ManagerPool> control_;
  std::unique_ptr<ManagerPool> subscription_;
  std::unique_ptr<ManagerPool> query_;
  std::unique_ptr<ManagerPool> broker_;
  BoundedQueue<Outbound> telemetry_queue_;
  std::thread telemetry_thread_;

  // FrameGated pending slot
  std::mutex gate_mu_;
  std::optional<std::pair<Work, ActionCall>> gated_;

  // Listener
  std::unique_ptr<transport::TcpListener> listener_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};

  mutable std::mutex metrics_mu_;
  ControlCounters counters_;
  std::vector<MessageTiming> timings_;
  std::atomic<std::uint64_t> responses_sent_{0};

  std::mutex idle_mu_;
  std::condition_variable idle_cv_;
  std::int64_t pending_ = 0;
};

}  // namespace hexsim::agent
