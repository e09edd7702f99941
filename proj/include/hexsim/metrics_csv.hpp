#pragma once

// Versioned metric CSV shared by every CLI command.

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace hexsim::metrics {

inline constexpr const char* kSchemaLine = "#schema=hexsim-metrics/1";
inline constexpr const char* kHeaderLine = "t_s,scope,id,throughput_mbps,rtt_ms,alloc_rb,state,utilization,extra";

struct MetricRecord {
  double t_s = 0.0;
  std::string scope;  // slice, ue, cell, hu, agent
  std::string id;
  std::optional<double> throughput_mbps;
  std::optional<double> rtt_ms;
  std::optional<double> alloc_rb;
  std::string state;
  std::optional<double> utilization;
  std::vector<std::pair<std::string, std::string>> extra;  // written as k=v;k=v
};

// Fixed three-decimal formatting keeps the output byte-stable.
std::string format_number(double v);

// Throws Error(InvalidInput) when a text field holds ',', ';', '=' or a newline,
// or when two records share (t_s, scope, id).
void write_csv(std::ostream& out, const std::vector<MetricRecord>& records);
void write_csv_file(const std::string& path, const std::vector<MetricRecord>& records);

}  // namespace hexsim::metrics
