#pragma once

// FlexiSlice PML plugin: staged FS context with TTI-boundary publication and
// the four FS APIs (telemetry registration, statistics, context change, control).

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hexsim/fssf_algorithms.hpp"
#include "hexsim/pml.hpp"
#include "hexsim/slice_model.hpp"

namespace hexsim::fs {

inline constexpr const char* kFsPluginId = "fs";
inline constexpr const char* kApiTelemetryRegistration = "fs.telemetry_registration";
inline constexpr const char* kApiStatistics = "fs.statistics";
inline constexpr const char* kApiContextChange = "fs.context_change";
inline constexpr const char* kApiControl = "fs.control";
inline constexpr const char* kApiTelemetryDeregistration = "fs.telemetry_deregistration";
inline constexpr const char* kAdminPluginId = "pml-admin";
inline constexpr const char* kApiPmlConfig = "pml.config";

// Configuration writes go to a staged context under a writer mutex. The TTI
// driver adopts committed configuration without ever blocking and publishes
// an immutable snapshot for readers.
class FsStore {
 public:
  using ChangeListener = std::function<void(const std::vector<ContextChangeRecord>&)>;

  explicit FsStore(FsContext initial);

  // Applies `fn` to the staged context as one all-or-nothing transaction.
  // `fn` runs on a scratch copy that replaces the staged context only when it
  // succeeds. Change listeners run after the writer lock is released.
  void mutate(const std::function<void(FsContext&)>& fn);

  // Reads the staged context under the writer lock.
  template <typename Fn>
  auto read_staged(Fn&& fn) const {
    std::lock_guard lock(writer_mu_);
    return fn(staged_);
  }

  // TTI driver only. Adopts the newest committed configuration into the live
  // context (lock-free) and publishes a snapshot of the live context.
  void on_tti_boundary();
  FsContext& live() { return live_; }

  std::shared_ptr<const FsContext> published() const;
  std::uint64_t committed_epoch() const { return committed_epoch_.load(); }
  std::uint64_t live_epoch() const { return live_epoch_; }

  void set_change_listener(ChangeListener listener);

 private:
  struct Committed {
    std::uint64_t epoch = 0;
    std::shared_ptr<const FsContext> config;
  };

  mutable std::mutex writer_mu_;
  FsContext staged_;
  std::shared_ptr<const Committed> committed_;
  std::atomic<std::uint64_t> committed_epoch_{0};
  FsContext live_;
  std::uint64_t live_epoch_ = 0;
  std::shared_ptr<const FsContext> published_;
  std::mutex listener_mu_;
  ChangeListener listener_;
};

struct TelemetryTrigger {
  enum class Kind { Periodic, Event } kind = Kind::Periodic;
  std::uint32_t period_ms = 1000;
  std::string event = "context_change";
};

struct TelemetryEvent {
  std::uint64_t reg_id = 0;
  std::uint64_t t_ms = 0;
  std::optional<ContextReport> report;               // periodic
  std::vector<ContextChangeRecord> changes;          // event
};

using TelemetrySink = std::function<void(const TelemetryEvent&)>;

struct TelemetryRegistrationRequest {
  Targets targets;
  TelemetryTrigger trigger;
  TelemetrySink sink;
};

struct SliceUpdate {
  SliceId slice_id;
  std::optional<SliceState> state;
  std::optional<int> dedicated_rb;
  std::optional<int> prioritized_rb;
  std::optional<int> shared_priority;
  std::optional<std::string> fd_scheduler;
  std::optional<std::set<std::string>> hu_associations;
};

struct UeUpdate {
  UeId ue_id;
  std::optional<DrbId> drb_id;  // all bearers of the UE when absent
  int bearer_priority = 1;
};

struct ControlRequest {
  std::vector<SliceUpdate> slices;
  std::vector<UeUpdate> ues;
};

// Lockout paths touched by a control request.
std::vector<std::string> parameter_paths(const ControlRequest& req);

class FsPlugin {
 public:
  FsPlugin(FsStore& store, const fssf::AlgorithmRegistry& algorithms = fssf::builtin_registry());

  // Manifest exposing the four FS APIs plus telemetry deregistration; the plugin must outlive the PML.
  pml::PluginManifest manifest();

  // Direct API bodies (the PML handlers delegate here).
  std::uint64_t register_telemetry(const TelemetryRegistrationRequest& req);
  void deregister_telemetry(std::uint64_t reg_id);
  ContextReport statistics(const Targets& targets) const;
  std::vector<ContextChangeRecord> context_changes(std::uint64_t since) const;
  void control(const ControlRequest& req, const std::string& caller);

  // TTI driver hook: boundary publication then due periodic reports.
  void on_tti(std::uint64_t now_ms);

  std::size_t registration_count() const;

 private:
  struct Registration {
    std::uint64_t id = 0;
    Targets targets;
    TelemetryTrigger trigger;
    TelemetrySink sink;
    std::uint64_t next_due_ms = 0;
  };

  void on_changes(const std::vector<ContextChangeRecord>& records);

  FsStore& store_;
  const fssf::AlgorithmRegistry& algorithms_;
  mutable std::mutex reg_mu_;
  std::map<std::uint64_t, Registration> registrations_;
  std::uint64_t next_reg_id_ = 1;
  std::atomic<std::uint64_t> now_ms_{0};
};

// Plugin exposing runtime PML settings (lockout window) to OAM functions.
pml::PluginManifest admin_manifest(pml::Pml& pml);

}  // namespace hexsim::fs
