#include "hexsim/metrics_csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "hexsim/error.hpp"

namespace hexsim::metrics {

namespace {

void check_text(const std::string& s, const char* what) {
  if (s.find_first_of(",;=\n\r") != std::string::npos) {
    throw Error(Errc::InvalidInput, std::string(what) + " holds a reserved character: " + s);
  }
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) throw Error(Errc::InvalidInput, "non-finite metric value");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

void write_csv(std::ostream& out, const std::vector<MetricRecord>& records) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  out << kSchemaLine << '\n' << kHeaderLine << '\n';
  for (const auto& r : records) {
    check_text(r.scope, "scope");
    check_text(r.id, "id");
    check_text(r.state, "state");
    const auto t = format_number(r.t_s);
    if (!seen.emplace(t, r.scope, r.id).second) {
      throw Error(Errc::InvalidInput, "duplicate record " + t + "," + r.scope + "," + r.id);
    }
    std::string extra;
    for (const auto& [k, v] : r.extra) {
      check_text(k, "extra key");
      check_text(v, "extra value");
      if (!extra.empty()) extra += ';';
      extra += k + '=' + v;
    }
    out << t << ',' << r.scope << ',' << r.id << ',' << optional_number(r.throughput_mbps) << ','
        << optional_number(r.rtt_ms) << ',' << optional_number(r.alloc_rb) << ',' << r.state << ','
        << optional_number(r.utilization) << ',' << extra << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<MetricRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::InvalidInput, "cannot write " + path);
  write_csv(out, records);
  if (!out) throw Error(Errc::InvalidInput, "write failed for " + path);
}

}  // namespace hexsim::metrics
