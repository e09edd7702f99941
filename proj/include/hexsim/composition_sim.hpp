#pragma once

// HU composition model: service chains over HU instances, equal-split load
// balancing, bottleneck delivery and threshold autoscaling.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hexsim::composition {

using nlohmann::json;

struct HuType {
  std::string name;  // "type1".."type6", or "du"/"cu" for the monolithic baseline
  std::vector<std::string> services;
  bool user_plane = true;
};

// The six HU types plus the baseline DU and CU.
const std::vector<HuType>& hu_catalog();
const HuType& hu_type(const std::string& name);  // Throws Error(InvalidInput).

struct HuInstance {
  std::string instance_id;
  std::string type;
  std::string node;
  double capacity_mbps = 0.0;
  double load_mbps = 0.0;

  double utilization() const { return capacity_mbps > 0.0 ? load_mbps / capacity_mbps : 0.0; }
};

struct ServiceChain {
  std::string name;
  std::vector<std::string> types;  // traversal order
};

struct Flow {
  std::string source;  // e.g. "cell-3"
  std::string chain;
  double mbps = 0.0;
};

struct FlowResult {
  std::string source;
  double offered_mbps = 0.0;
  double delivered_mbps = 0.0;

  double loss() const { return offered_mbps > 0.0 ? 1.0 - delivered_mbps / offered_mbps : 0.0; }
};

struct ScalingAction {
  std::string type;
  std::string new_instance;
};

class Composition {
 public:
  // Only `scalable` types are autoscaled; an empty set scales every type.
  explicit Composition(double scale_threshold = 0.90, std::set<std::string> scalable = {})
      : threshold_(scale_threshold), scalable_(std::move(scalable)) {}

  // Throws Error(InvalidInput) for unknown types, non-positive capacity, or a
  // user-plane chain without type1 (baseline chains must start at "du").
  void define_chain(ServiceChain chain);
  const HuInstance& add_instance(const std::string& type, double capacity_mbps, std::string node = {});

  // Replaces every instance load. Each flow loads every type on its chain,
  // split equally over that type's instances. Throws Error(UnknownChain).
  std::vector<FlowResult> route_traffic(const std::vector<Flow>& flows);

  // Adds one instance (capacity of the type's first instance) to each type
  // with an instance above the threshold and rebalances the last routed flows.
  std::vector<ScalingAction> autoscale_tick();

  const std::vector<HuInstance>& instances() const { return instances_; }
  std::size_t instance_count(const std::string& type) const;
  double max_utilization() const;
  double max_utilization(const std::set<std::string>& types) const;

 private:
  double threshold_;
  std::set<std::string> scalable_;
  std::map<std::string, ServiceChain> chains_;
  std::vector<HuInstance> instances_;
  std::map<std::string, int> next_index_;
  std::vector<Flow> last_flows_;
};

enum class Mode { HexRan, Baseline };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);  // Throws Error(InvalidInput).

struct ScalingConfig {
  Mode mode = Mode::HexRan;
  int max_cells = 10;
  double per_cell_mbps = 100.0;
  int hold_s = 10;                  // simulated seconds per cell count
  double threshold = 0.90;
  double du_capacity_mbps = 110.0;  // type1-3 and baseline DU, per instance
  double cu_capacity_mbps = 450.0;  // baseline CU and initial type4/type5 instance
};

// Throws Error(InvalidInput) for out-of-range fields or unknown keys.
ScalingConfig parse_scaling_config(const json& doc);

struct NfUtilization {
  double peak = 0.0;
  double average = 0.0;
  std::size_t instances = 0;
};

struct SecondMetrics {
  int t_s = 0;
  int cells = 0;
  double offered_mbps = 0.0;
  double delivered_mbps = 0.0;
  double loss = 0.0;
  std::map<std::string, NfUtilization> nf;  // per HU type
  std::vector<HuInstance> instances;
  std::vector<FlowResult> flows;
  std::vector<ScalingAction> actions;
};

struct StepSummary {
  int cells = 0;
  double delivered_mbps = 0.0;  // settled (last second of the hold)
  double loss = 0.0;
  double peak_utilization = 0.0;            // settled, over the central NFs
  double transient_peak_utilization = 0.0;  // central NFs, first second after the load change
  std::map<std::string, NfUtilization> nf;
};

struct ScalingResult {
  Mode mode = Mode::HexRan;
  std::vector<SecondMetrics> seconds;
  std::vector<StepSummary> steps;  // one per cell count
  double peak_utilization = 0.0;  // max settled central-NF utilization over the run

  const StepSummary& final_step() const { return steps.back(); }
};

// Central NFs: type4/type5 in hexran mode, the CU in baseline mode. Per-cell
// type1-3 and DU instances are sized per cell and never scaled.
//
// Ramps 1..max_cells, holding each count for hold_s seconds. Autoscaling runs
// once per second in hexran mode and takes effect from the next second.
ScalingResult run_scaling_experiment(const ScalingConfig& config);

}  // namespace hexsim::composition
