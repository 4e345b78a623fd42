#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "adiabatic/analysis.hpp"
#include "adiabatic/harness/config.hpp"

namespace adiabatic::harness {

using ordered_json = nlohmann::ordered_json;

/// %.17g without the C locale: 17 significant digits round-trip any double.
std::string format_double(double x);

ordered_json to_json(const LeakageReport& r);
ordered_json to_json(const CriterionReport& r);
ordered_json to_json(const ConvergenceStudy& s);

/// Header shared by every report: command, config hash, timestamp (null
/// unless output.timestamp is set) and the resolved config.
ordered_json report_header(const std::string& command, const ExperimentConfig& config);

/// T,eta_exact,eta_first_order,w_deviation rows in T order.
std::string sweep_csv(const ConvergenceStudy& s);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace adiabatic::harness
