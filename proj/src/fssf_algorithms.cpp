#include "hexsim/fssf_algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hexsim/error.hpp"

namespace hexsim::fssf {

namespace {

constexpr double kEps = 1e-9;

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::vector<int> demands_of(const std::vector<AlgoDrb>& drbs) {
  std::vector<int> d;
  d.reserve(drbs.size());
  for (const auto& drb : drbs) d.push_back(std::max(0, drb.demand_rb));
  return d;
}

}  // namespace

std::vector<int> weighted_fair_share(int budget, const std::vector<int>& demands,
                                     const std::vector<double>& weights,
                                     const std::vector<std::size_t>& tie_order) {
  const std::size_t n = demands.size();
  std::vector<int> out(n, 0);
  if (weights.size() != n || tie_order.size() != n) {
    throw Error(Errc::InvalidInput, "weighted_fair_share: size mismatch");
  }

  std::vector<std::size_t> active;
  long total_demand = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (demands[i] > 0 && weights[i] > 0.0) {
      active.push_back(i);
      total_demand += demands[i];
    }
  }
  const int target = static_cast<int>(std::min<long>(std::max(0, budget), total_demand));
  if (target == 0) return out;

  // Continuous water level: entries saturate in order of demand/weight.
  std::sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
    return demands[a] / weights[a] < demands[b] / weights[b];
  });
  std::vector<double> share(n, 0.0);
  double remaining = target;
  double weight_sum = 0.0;
  for (auto i : active) weight_sum += weights[i];
  std::size_t k = 0;
  for (; k < active.size(); ++k) {
    const auto i = active[k];
    const double level = remaining / weight_sum;
    if (demands[i] / weights[i] > level + kEps) break;
    share[i] = demands[i];
    remaining -= demands[i];
    weight_sum -= weights[i];
  }
  if (k < active.size()) {
    const double level = remaining / weight_sum;
    for (std::size_t m = k; m < active.size(); ++m) {
      share[active[m]] = level * weights[active[m]];
    }
  }

  int assigned = 0;
  for (auto i : active) {
    out[i] = std::min(demands[i], static_cast<int>(std::floor(share[i] + kEps)));
    assigned += out[i];
  }

  std::vector<std::size_t> rank(n);
  for (std::size_t p = 0; p < n; ++p) rank[tie_order[p]] = p;
  std::vector<std::size_t> candidates;
  for (auto i : active) {
    if (out[i] < demands[i]) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    const double fa = share[a] - out[a];
    const double fb = share[b] - out[b];
    if (std::abs(fa - fb) > kEps) return fa > fb;
    return rank[a] < rank[b];
  });
  for (std::size_t c = 0; assigned < target && c < candidates.size(); ++c) {
    ++out[candidates[c]];
    ++assigned;
  }
  return out;
}

double inverse_priority_weight(int bearer_priority) {
  return 1.0 / std::max(1, bearer_priority);
}

SliceAlgorithm make_priority_weighted(std::function<double(int)> weight) {
  return [weight = std::move(weight)](int budget, const std::vector<AlgoDrb>& drbs,
                                      const AlgoState&) {
    std::vector<double> w;
    w.reserve(drbs.size());
    for (const auto& d : drbs) w.push_back(weight(d.bearer_priority));
    // Remainder goes to the highest weight first, then the lower drb_id.
    auto order = identity_order(drbs.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (std::abs(w[a] - w[b]) > kEps) return w[a] > w[b];
      return drbs[a].drb_id < drbs[b].drb_id;
    });
    return weighted_fair_share(budget, demands_of(drbs), w, order);
  };
}

SliceAlgorithm make_priority_weighted(std::map<int, double> table) {
  return make_priority_weighted([table = std::move(table)](int bp) {
    auto it = table.find(bp);
    return it == table.end() ? inverse_priority_weight(bp) : it->second;
  });
}

SliceAlgorithm make_round_robin() {
  return [](int budget, const std::vector<AlgoDrb>& drbs, const AlgoState& state) {
    const std::size_t n = drbs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t p = 0; p < n; ++p) order[p] = (state.rr_cursor + p) % n;
    return weighted_fair_share(budget, demands_of(drbs), std::vector<double>(n, 1.0), order);
  };
}

SliceAlgorithm make_proportional_fair() {
  return [](int budget, const std::vector<AlgoDrb>& drbs, const AlgoState&) {
    std::vector<double> w;
    w.reserve(drbs.size());
    for (const auto& d : drbs) w.push_back(d.per_rb_bits / std::max(1.0, d.avg_bits));
    auto order = identity_order(drbs.size());
    return weighted_fair_share(budget, demands_of(drbs), w, order);
  };
}

SliceAlgorithm make_max_throughput() {
  return [](int budget, const std::vector<AlgoDrb>& drbs, const AlgoState&) {
    auto order = identity_order(drbs.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (drbs[a].per_rb_bits != drbs[b].per_rb_bits) {
        return drbs[a].per_rb_bits > drbs[b].per_rb_bits;
      }
      return drbs[a].drb_id < drbs[b].drb_id;
    });
    std::vector<int> out(drbs.size(), 0);
    int left = std::max(0, budget);
    for (auto i : order) {
      out[i] = std::min(left, std::max(0, drbs[i].demand_rb));
      left -= out[i];
    }
    return out;
  };
}

AlgorithmRegistry AlgorithmRegistry::with_builtins() {
  AlgorithmRegistry r;
  r.add("priority_weighted", make_priority_weighted());
  r.add("round_robin", make_round_robin());
  r.add("proportional_fair", make_proportional_fair());
  r.add("max_throughput", make_max_throughput());
  return r;
}

void AlgorithmRegistry::add(const std::string& id, SliceAlgorithm algorithm) {
  if (id.empty() || !algorithm) throw Error(Errc::InvalidInput, "invalid algorithm registration");
  algorithms_[id] = std::move(algorithm);
}

const SliceAlgorithm& AlgorithmRegistry::get(const std::string& id) const {
  auto it = algorithms_.find(id);
  if (it == algorithms_.end()) throw Error(Errc::InvalidInput, "unknown scheduler " + id);
  return it->second;
}

std::vector<std::string> AlgorithmRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : algorithms_) out.push_back(id);
  return out;
}

const AlgorithmRegistry& builtin_registry() {
  static const AlgorithmRegistry registry = AlgorithmRegistry::with_builtins();
  return registry;
}

}  // namespace hexsim::fssf
