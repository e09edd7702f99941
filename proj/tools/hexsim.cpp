// hexsim command-line entry point: scenario replay, agent benchmarks, the HU
// scaling experiment and the oracle self-test.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fssf_oracle.hpp"
#include "hexsim/composition_sim.hpp"
#include "hexsim/error.hpp"
#include "hexsim/metrics_csv.hpp"
#include "hexsim/ric_harness.hpp"
#include "state_machine_oracle.hpp"

namespace fsys = std::filesystem;
using hexsim::Errc;
using hexsim::Error;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 2;
constexpr int kExitScenario = 3;
constexpr int kExitAcceptance = 4;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// Writes the summary to stdout and to `path`.
void emit_summary(const fsys::path& path, const std::string& text) {
  std::cout << text;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::InvalidInput, "cannot write " + path.string());
  out << text;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidInput, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidInput, path + ": " + e.what());
  }
}

int cmd_scenario(const std::string& script_path, const fsys::path& out_dir) {
  auto script = hexsim::scenario::load_scenario(script_path);
  if (const char* env = std::getenv("HEXSIM_SEED")) {
    try {
      script.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidInput, "HEXSIM_SEED must be an unsigned integer");
    }
  }
  const auto result = hexsim::ric::run_scenario(script);
  const std::string stem = fsys::path(script_path).stem().string();
  fsys::create_directories(out_dir);
  hexsim::metrics::write_csv_file((out_dir / (stem + "_metrics.csv")).string(), result.records);

  std::ostringstream s;
  s << "scenario " << (script.name.empty() ? stem : script.name) << " seed " << script.seed << ", "
    << result.control_requests << " controls, " << result.indications << " indications\n";
  for (const auto& o : result.outcomes) {
    if (!o.ok) s << "  t=" << fmt("%.1f", o.t_s) << " " << o.action << " " << o.target << " failed: " << o.cause << "\n";
  }
  for (const auto& p : hexsim::ric::summarize_phases(script, result)) {
    s << "phase " << fmt("%.0f", p.start_s) << "-" << fmt("%.0f", p.end_s) << " s: utilization "
      << fmt("%.2f", p.utilization) << "\n";
    for (const auto& [id, mbps] : p.slice_mbps) {
      s << "  slice " << id << " " << fmt("%.1f", mbps) << " Mbps, max rtt " << fmt("%.0f", p.slice_rtt_ms.at(id))
        << " ms\n";
    }
    for (const auto& [id, mbps] : p.ue_mbps) {
      s << "  ue " << id << " " << fmt("%.1f", mbps) << " Mbps, " << fmt("%.1f", p.ue_rb.at(id)) << " RBs\n";
    }
  }
  emit_summary(out_dir / (stem + "_summary.txt"), s.str());
  return kExitOk;
}

int cmd_bench(const std::string& mode, const std::string& config_path, const fsys::path& out_dir) {
  using hexsim::agent::ExecutionMode;
  using hexsim::metrics::MetricRecord;
  std::vector<MetricRecord> records;
  std::ostringstream s;
  fsys::create_directories(out_dir);

  if (mode == "delay") {
    const auto cfg = hexsim::ric::parse_delay_config(config_path.empty() ? json::object() : read_json(config_path));
    for (auto m : {ExecutionMode::Decoupled, ExecutionMode::Serialized}) {
      const auto stats = hexsim::ric::benchmark_delay(cfg, m);
      std::vector<double> xs;
      std::vector<double> ys;
      s << hexsim::agent::to_string(m) << " processing delay (us):\n";
      for (const auto& d : stats) {
        MetricRecord r;
        r.t_s = d.instances;
        r.scope = "agent";
        r.id = std::string(hexsim::agent::to_string(m));
        r.extra = {{"instances", std::to_string(d.instances)},
                   {"samples", std::to_string(d.samples)},
                   {"median_us", hexsim::metrics::format_number(d.median_us)},
                   {"p95_us", hexsim::metrics::format_number(d.p95_us)},
                   {"mean_us", hexsim::metrics::format_number(d.mean_us)}};
        records.push_back(std::move(r));
        s << "  N=" << d.instances << " median " << fmt("%.1f", d.median_us) << " p95 " << fmt("%.1f", d.p95_us)
          << "\n";
        if (d.samples > 0) {
          xs.push_back(d.instances);
          ys.push_back(d.median_us);
        }
      }
      if (xs.size() >= 2) {
        const auto fit = hexsim::ric::fit_line(xs, ys);
        s << "  slope " << fmt("%.3f", fit.slope) << " us/instance, r2 " << fmt("%.3f", fit.r2) << "\n";
      }
    }
    hexsim::metrics::write_csv_file((out_dir / "bench_delay.csv").string(), records);
    emit_summary(out_dir / "bench_delay_summary.txt", s.str());
    return kExitOk;
  }

  const auto cfg =
      hexsim::ric::parse_reliability_config(config_path.empty() ? json::object() : read_json(config_path));
  for (auto m : {ExecutionMode::Decoupled, ExecutionMode::FrameGated}) {
    s << hexsim::agent::to_string(m) << " reliability over " << cfg.duration_s << " s:\n";
    for (const auto& r : hexsim::ric::benchmark_reliability(cfg, m)) {
      MetricRecord rec;
      rec.t_s = r.rate;
      rec.scope = "agent";
      rec.id = std::string(hexsim::agent::to_string(m));
      rec.extra = {{"rate", std::to_string(r.rate)},
                   {"received", std::to_string(r.received)},
                   {"executed", std::to_string(r.executed)},
                   {"ratio", hexsim::metrics::format_number(r.ratio)}};
      records.push_back(std::move(rec));
      s << "  " << r.rate << " msg/s: " << fmt("%.3f", r.ratio) << " (" << r.executed << "/" << r.received << ")\n";
    }
  }
  hexsim::metrics::write_csv_file((out_dir / "bench_reliability.csv").string(), records);
  emit_summary(out_dir / "bench_reliability_summary.txt", s.str());
  return kExitOk;
}

int cmd_scale(const std::string& mode, int cells, const std::string& config_path, const fsys::path& out_dir) {
  namespace comp = hexsim::composition;
  auto cfg = comp::parse_scaling_config(config_path.empty() ? json::object() : read_json(config_path));
  cfg.mode = comp::parse_mode(mode);
  if (cells > 0) cfg.max_cells = cells;
  const auto result = comp::run_scaling_experiment(cfg);

  std::vector<hexsim::metrics::MetricRecord> records;
  for (const auto& sec : result.seconds) {
    for (const auto& f : sec.flows) {
      hexsim::metrics::MetricRecord r;
      r.t_s = sec.t_s;
      r.scope = "cell";
      r.id = f.source;
      r.throughput_mbps = f.delivered_mbps;
      r.extra = {{"offered_mbps", hexsim::metrics::format_number(f.offered_mbps)},
                 {"loss", hexsim::metrics::format_number(f.loss())}};
      records.push_back(std::move(r));
    }
    for (const auto& i : sec.instances) {
      hexsim::metrics::MetricRecord r;
      r.t_s = sec.t_s;
      r.scope = "hu";
      r.id = i.instance_id;
      r.throughput_mbps = i.load_mbps;
      r.utilization = i.utilization();
      r.extra = {{"type", i.type}, {"node", i.node}, {"capacity_mbps", hexsim::metrics::format_number(i.capacity_mbps)}};
      records.push_back(std::move(r));
    }
  }
  fsys::create_directories(out_dir);
  const std::string stem = "scale_" + std::string(comp::to_string(cfg.mode));
  hexsim::metrics::write_csv_file((out_dir / (stem + ".csv")).string(), records);

  std::ostringstream s;
  s << "mode " << comp::to_string(cfg.mode) << "\n";
  for (const auto& st : result.steps) {
    s << "  cells " << st.cells << ": delivered " << fmt("%.1f", st.delivered_mbps) << " Mbps, loss "
      << fmt("%.3f", st.loss) << ", peak utilization " << fmt("%.3f", st.peak_utilization) << "\n";
  }
  const auto& last = result.final_step();
  s << "cells " << last.cells << ": delivered " << fmt("%.1f", last.delivered_mbps) << " Mbps, peak utilization "
    << fmt("%.2f", result.peak_utilization) << "\n";
  emit_summary(out_dir / (stem + "_summary.txt"), s.str());
  return kExitOk;
}

int cmd_selftest() {
  const auto eq = hexsim::oracle::check_equivalence(2024, 10000);
  std::cout << "fssf oracle equivalence: " << eq.instances - eq.mismatches << "/" << eq.instances << " match\n";
  if (eq.mismatches > 0) std::cout << "  first mismatch: " << eq.first_mismatch << "\n";
  const auto sm = hexsim::oracle::run_state_machine_suite();
  std::cout << "state machine suite: " << sm.cases - sm.mismatches << "/" << sm.cases << " match\n";
  for (const auto& f : sm.failures) std::cout << "  " << f << "\n";
  const bool ok = eq.mismatches == 0 && sm.mismatches == 0 && eq.instances > 0 && sm.cases > 0;
  std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hexsim: HexRAN desk-scale simulator"};
  app.require_subcommand(1);

  std::string script;
  std::string out = ".";
  auto* scenario = app.add_subcommand("scenario", "Replay a scenario script");
  scenario->add_option("--script", script, "Scenario JSON")->required();
  scenario->add_option("--out", out, "Output directory")->required();

  std::string bench_mode;
  std::string bench_config;
  auto* bench = app.add_subcommand("bench-agent", "Agent delay or reliability benchmark");
  bench->add_option("--mode", bench_mode, "delay or reliability")
      ->required()
      ->check(CLI::IsMember({"delay", "reliability"}));
  bench->add_option("--config", bench_config, "Benchmark JSON");
  bench->add_option("--out", out, "Output directory")->required();

  std::string scale_mode;
  int cells = 0;
  std::string scale_config;
  auto* scale = app.add_subcommand("scale", "HU scaling experiment");
  scale->add_option("--mode", scale_mode, "hexran or baseline")
      ->required()
      ->check(CLI::IsMember({"hexran", "baseline"}));
  scale->add_option("--cells", cells, "Maximum cell count")->check(CLI::Range(1, 1000));
  scale->add_option("--config", scale_config, "Scaling JSON");
  scale->add_option("--out", out, "Output directory")->required();

  auto* selftest = app.add_subcommand("selftest", "Oracle equivalence and state-machine suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadArgs;
  }

  try {
    if (*scenario) return cmd_scenario(script, out);
    if (*bench) return cmd_bench(bench_mode, bench_config, out);
    if (*scale) return cmd_scale(scale_mode, cells, scale_config, out);
    if (*selftest) return cmd_selftest();
  } catch (const Error& e) {
    std::cerr << "hexsim: " << e.what() << "\n";
    return *scenario ? kExitScenario : kExitBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "hexsim: " << e.what() << "\n";
    return *scenario ? kExitScenario : kExitBadArgs;
  }
  return kExitBadArgs;
}
