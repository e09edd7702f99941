#include "hexsim/composition_sim.hpp"

#include <algorithm>
#include <set>

#include "hexsim/error.hpp"

namespace hexsim::composition {

const std::vector<HuType>& hu_catalog() {
  static const std::vector<HuType> catalog{
      {"type1", {"low-phy", "high-phy"}, true},
      {"type2", {"user-scheduling"}, true},
      {"type3", {"buffering", "segmentation"}, true},
      {"type4", {"user-plane-encryption"}, true},
      {"type5", {"qos-enforcement"}, true},
      {"type6", {"cell-management", "user-management", "bearer-management"}, false},
      {"du", {"low-phy", "high-phy", "user-scheduling", "buffering", "segmentation"}, true},
      {"cu", {"user-plane-encryption", "qos-enforcement", "cell-management", "user-management",
              "bearer-management"},
       true},
  };
  return catalog;
}

const HuType& hu_type(const std::string& name) {
  for (const auto& t : hu_catalog()) {
    if (t.name == name) return t;
  }
  throw Error(Errc::InvalidInput, "unknown HU type " + name);
}

void Composition::define_chain(ServiceChain chain) {
  bool has_phy = false;
  for (const auto& t : chain.types) {
    if (!hu_type(t).user_plane) throw Error(Errc::InvalidInput, t + " carries no user-plane traffic");
    has_phy = has_phy || t == "type1" || t == "du";
  }
  if (!has_phy) throw Error(Errc::InvalidInput, "chain " + chain.name + " lacks PHY services");
  chains_[chain.name] = std::move(chain);
}

const HuInstance& Composition::add_instance(const std::string& type, double capacity_mbps, std::string node) {
  hu_type(type);
  if (!(capacity_mbps > 0.0)) throw Error(Errc::InvalidInput, "capacity must be positive");
  const int index = ++next_index_[type];
  HuInstance inst;
  inst.instance_id = type + "-" + std::to_string(index);
  inst.type = type;
  inst.node = node.empty() ? "node-" + inst.instance_id : std::move(node);
  inst.capacity_mbps = capacity_mbps;
  instances_.push_back(std::move(inst));
  return instances_.back();
}

std::size_t Composition::instance_count(const std::string& type) const {
  return static_cast<std::size_t>(
      std::count_if(instances_.begin(), instances_.end(), [&](const auto& i) { return i.type == type; }));
}

std::vector<FlowResult> Composition::route_traffic(const std::vector<Flow>& flows) {
  std::map<std::string, double> type_load;
  for (const auto& f : flows) {
    auto it = chains_.find(f.chain);
    if (it == chains_.end()) throw Error(Errc::UnknownChain, "chain " + f.chain);
    for (const auto& t : it->second.types) {
      if (instance_count(t) == 0) throw Error(Errc::UnknownChain, "chain " + f.chain + " has no " + t + " instance");
      type_load[t] += f.mbps;
    }
  }
  last_flows_ = flows;

  std::map<std::string, double> pass_fraction;
  for (auto& inst : instances_) inst.load_mbps = 0.0;
  for (const auto& [type, load] : type_load) {
    const auto n = static_cast<double>(instance_count(type));
    double fraction = 0.0;
    for (auto& inst : instances_) {
      if (inst.type != type) continue;
      inst.load_mbps = load / n;
      fraction += inst.load_mbps > 0.0 ? std::min(1.0, inst.capacity_mbps / inst.load_mbps) : 1.0;
    }
    pass_fraction[type] = fraction / n;
  }

  std::vector<FlowResult> out;
  for (const auto& f : flows) {
    double delivered = f.mbps;
    for (const auto& t : chains_.at(f.chain).types) delivered *= pass_fraction[t];
    out.push_back({f.source, f.mbps, delivered});
  }
  return out;
}

std::vector<ScalingAction> Composition::autoscale_tick() {
  std::set<std::string> hot;
  for (const auto& inst : instances_) {
    if (inst.utilization() > threshold_ && (scalable_.empty() || scalable_.contains(inst.type))) {
      hot.insert(inst.type);
    }
  }
  std::vector<ScalingAction> actions;
  for (const auto& type : hot) {
    const auto proto = std::find_if(instances_.begin(), instances_.end(), [&](const auto& i) { return i.type == type; });
    const double capacity = proto->capacity_mbps;
    actions.push_back({type, add_instance(type, capacity).instance_id});
  }
  if (!actions.empty()) route_traffic(std::vector<Flow>(last_flows_));
  return actions;
}

double Composition::max_utilization() const {
  double m = 0.0;
  for (const auto& i : instances_) m = std::max(m, i.utilization());
  return m;
}

double Composition::max_utilization(const std::set<std::string>& types) const {
  double m = 0.0;
  for (const auto& i : instances_) {
    if (types.contains(i.type)) m = std::max(m, i.utilization());
  }
  return m;
}

std::string_view to_string(Mode m) { return m == Mode::HexRan ? "hexran" : "baseline"; }

Mode parse_mode(std::string_view s) {
  if (s == "hexran") return Mode::HexRan;
  if (s == "baseline") return Mode::Baseline;
  throw Error(Errc::InvalidInput, "mode must be hexran or baseline");
}

ScalingConfig parse_scaling_config(const json& doc) {
  static const std::set<std::string> keys{"mode", "max_cells", "per_cell_mbps", "hold_s",
                                          "threshold", "du_capacity_mbps", "cu_capacity_mbps"};
  if (!doc.is_object()) throw Error(Errc::InvalidInput, "scaling config must be an object");
  for (const auto& [k, _] : doc.items()) {
    if (!keys.contains(k)) throw Error(Errc::InvalidInput, "unknown scaling config field " + k);
  }
  ScalingConfig c;
  try {
    if (doc.contains("mode")) c.mode = parse_mode(doc["mode"].get<std::string>());
    c.max_cells = doc.value("max_cells", c.max_cells);
    c.per_cell_mbps = doc.value("per_cell_mbps", c.per_cell_mbps);
    c.hold_s = doc.value("hold_s", c.hold_s);
    c.threshold = doc.value("threshold", c.threshold);
    c.du_capacity_mbps = doc.value("du_capacity_mbps", c.du_capacity_mbps);
    c.cu_capacity_mbps = doc.value("cu_capacity_mbps", c.cu_capacity_mbps);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidInput, e.what());
  }
  if (c.max_cells < 1 || c.hold_s < 1 || c.per_cell_mbps < 0.0 || c.threshold <= 0.0 ||
      c.du_capacity_mbps <= 0.0 || c.cu_capacity_mbps <= 0.0) {
    throw Error(Errc::InvalidInput, "scaling config out of range");
  }
  return c;
}

namespace {

std::map<std::string, NfUtilization> nf_utilization(const std::vector<HuInstance>& instances) {
  std::map<std::string, NfUtilization> out;
  for (const auto& i : instances) {
    auto& u = out[i.type];
    u.peak = std::max(u.peak, i.utilization());
    u.average += i.utilization();
    ++u.instances;
  }
  for (auto& [_, u] : out) u.average /= static_cast<double>(u.instances);
  return out;
}

}  // namespace

ScalingResult run_scaling_experiment(const ScalingConfig& config) {
  const bool hexran = config.mode == Mode::HexRan;
  const std::set<std::string> central = hexran ? std::set<std::string>{"type4", "type5"} : std::set<std::string>{"cu"};
  Composition comp(config.threshold, central);
  const std::string chain = hexran ? "hexran-up" : "baseline-up";
  if (hexran) {
    comp.define_chain({chain, {"type1", "type2", "type3", "type4", "type5"}});
    comp.add_instance("type4", config.cu_capacity_mbps, "edge");
    comp.add_instance("type5", config.cu_capacity_mbps, "edge");
    comp.add_instance("type6", config.cu_capacity_mbps, "edge");
  } else {
    comp.define_chain({chain, {"du", "cu"}});
    comp.add_instance("cu", config.cu_capacity_mbps, "edge");
  }

  ScalingResult result;
  result.mode = config.mode;
  int t = 0;
  for (int cells = 1; cells <= config.max_cells; ++cells) {
    const std::string cell_node = "cell-site-" + std::to_string(cells);
    if (hexran) {
      for (const char* type : {"type1", "type2", "type3"}) comp.add_instance(type, config.du_capacity_mbps, cell_node);
    } else {
      comp.add_instance("du", config.du_capacity_mbps, cell_node);
    }
    std::vector<Flow> flows;
    for (int c = 1; c <= cells; ++c) flows.push_back({"cell-" + std::to_string(c), chain, config.per_cell_mbps});

    StepSummary step;
    step.cells = cells;
    for (int s = 0; s < config.hold_s; ++s, ++t) {
      SecondMetrics m;
      m.t_s = t;
      m.cells = cells;
      m.flows = comp.route_traffic(flows);
      for (const auto& f : m.flows) {
        m.offered_mbps += f.offered_mbps;
        m.delivered_mbps += f.delivered_mbps;
      }
      m.loss = m.offered_mbps > 0.0 ? 1.0 - m.delivered_mbps / m.offered_mbps : 0.0;
      m.nf = nf_utilization(comp.instances());
      m.instances = comp.instances();
      if (s == 0) step.transient_peak_utilization = comp.max_utilization(central);
      if (s == config.hold_s - 1) {
        step.delivered_mbps = m.delivered_mbps;
        step.loss = m.loss;
        step.peak_utilization = comp.max_utilization(central);
        step.nf = m.nf;
      }
      if (hexran) m.actions = comp.autoscale_tick();
      result.seconds.push_back(std::move(m));
    }
    result.peak_utilization = std::max(result.peak_utilization, step.peak_utilization);
    result.steps.push_back(std::move(step));
  }
  return result;
}

}  // namespace hexsim::composition
