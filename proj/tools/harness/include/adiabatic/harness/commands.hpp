#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adiabatic/harness/config.hpp"
#include "adiabatic/harness/report.hpp"

namespace adiabatic::harness {

namespace exit_code {
inline constexpr int ok = 0;
/// Failed invariant in verify, or an unexpected internal error.
inline constexpr int invariant = 1;
inline constexpr int config = 2;
inline constexpr int crossing = 3;
inline constexpr int criterion_unsatisfied = 4;
inline constexpr int no_exterior = 5;
inline constexpr int no_feasible_band = 6;
inline constexpr int resolution = 7;
inline constexpr int numerical = 8;
}  // namespace exit_code

/// Result of one command before anything touches the disk.
struct Outcome {
  int exit_code = exit_code::ok;
  ordered_json report;
  /// Only sweep produces a table.
  std::optional<std::string> csv;
  /// Human-readable summary for stdout.
  std::vector<std::string> lines;
};

Outcome simulate(const ExperimentConfig& config);
Outcome sweep(const ExperimentConfig& config, std::size_t jobs);
Outcome check_criterion(const ExperimentConfig& config);
Outcome plan_bands(const ExperimentConfig& config, double target_T);
Outcome verify(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

/// The named invariant checks run by verify, in report order.
std::vector<CheckResult> invariant_checks(const ExperimentConfig& config);

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::size_t jobs = 1;
  std::optional<std::size_t> steps;
  std::optional<double> threshold;
  std::optional<double> target_T;
};

/// Loads the config, applies overrides, runs `command`, and writes
/// resolved_config.json, report.json and (sweep) sweep.csv into the output
/// directory. Errors map to exit codes and leave no files behind.
int run_command(const std::string& command, const CommandOptions& options, std::ostream& out,
                std::ostream& err);

}  // namespace adiabatic::harness
