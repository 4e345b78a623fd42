#include "adiabatic/harness/report.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace adiabatic::harness {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("format_double: buffer too small");
  return std::string(buf, ptr);
}

ordered_json to_json(const LeakageReport& r) {
  return {{"T", r.T},
          {"j0", r.j0},
          {"band", r.band},
          {"eta_exact", r.eta_exact},
          {"eta_first_order", r.eta_first_order},
          {"w_deviation", r.w_deviation}};
}

ordered_json to_json(const CriterionReport& r) {
  return {{"T", r.T},
          {"max_coupling", r.max_coupling},
          {"min_gap", r.min_gap},
          {"margin", r.margin},
          {"threshold", r.threshold},
          {"satisfied", r.satisfied},
          {"s_at_max_coupling", r.s_at_max_coupling},
          {"s_at_min_gap", r.s_at_min_gap}};
}

ordered_json to_json(const ConvergenceStudy& s) {
  ordered_json runs = ordered_json::array();
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    ordered_json r = to_json(s.runs[i]);
    r["steps"] = s.steps[i];
    r["gap_margin_ok"] = static_cast<bool>(s.gap_margin_ok[i]);
    runs.push_back(std::move(r));
  }
  ordered_json out;
  out["status"] = to_string(s.status);
  if (s.fit) {
    out["fit"] = {{"slope", s.fit->slope},
                  {"intercept", s.fit->intercept},
                  {"r_squared", s.fit->r_squared},
                  {"T", s.fit->T},
                  {"eta", s.fit->eta}};
  } else {
    out["fit"] = nullptr;
  }
  out["excluded_T"] = s.excluded_T;
  out["intertwining_residual"] = s.intertwining_residual;
  out["runs"] = std::move(runs);
  return out;
}

ordered_json report_header(const std::string& command, const ExperimentConfig& config) {
  ordered_json h;
  h["command"] = command;
  h["config_hash"] = config_hash(config);
  if (config.output.timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    h["timestamp"] = buf;
  } else {
    h["timestamp"] = nullptr;
  }
  h["config"] = to_json(config);
  return h;
}

std::string sweep_csv(const ConvergenceStudy& s) {
  std::ostringstream os;
  os << "T,eta_exact,eta_first_order,w_deviation\n";
  for (const auto& r : s.runs) {
    os << format_double(r.T) << ',' << format_double(r.eta_exact) << ','
       << format_double(r.eta_first_order) << ',' << format_double(r.w_deviation) << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace adiabatic::harness
