#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "adiabatic/analysis.hpp"
#include "adiabatic/errors.hpp"
#include "adiabatic/propagation.hpp"
#include "adiabatic/spectral_model.hpp"

namespace adiabatic::harness {

/// Parse or validation failure in an experiment description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GridSection {
  double k_min = 1.0;
  double k_max = 2.0;
  std::size_t n = 16;
};

struct DispersionSection {
  DispersionFamily family = DispersionFamily::linear;
  DispersionSchedule::Coefficients coefficients{};
  /// Tabulated family: number of s-knots and the row-major knots x N table.
  std::size_t knots = 0;
  std::vector<double> table;
};

struct RotationSection {
  RotationBuilder builder = RotationBuilder::nearest_neighbor;
  AngleProfile profile = AngleProfile::cubic;
  double theta_max = 0.4;
  std::size_t bandwidth = 1;
  std::uint64_t seed = 0;
};

struct BandsSection {
  std::size_t m = 2;
};

struct RunSection {
  std::optional<double> T;
  std::vector<double> T_list;
  std::size_t steps = 4000;
  Scheme scheme = Scheme::midpoint_exponential;
  GeneratorKind variant = GeneratorKind::kato_state;
};

struct AnalysisSection {
  std::size_t j0 = 7;
  std::size_t s_samples = 101;
  double margin = 100.0;
  double threshold = kDefaultCriterionThreshold;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<std::string> formats{"json", "csv"};
  bool timestamp = false;
};

struct ExperimentConfig {
  GridSection grid;
  DispersionSection dispersion;
  RotationSection rotation;
  BandsSection bands;
  RunSection run;
  AnalysisSection analysis;
  OutputSection output;
};

/// Parses the sectioned `key = value` format. `source` names the input in
/// error messages. Sections grid, dispersion, rotation, bands and run are
/// required; analysis and output fall back to defaults. Unknown sections or
/// keys are rejected.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Range checks that need more than one key. Throws ConfigError.
void validate(const ExperimentConfig& config);

/// Every field with defaults materialized, in a fixed key order.
nlohmann::ordered_json to_json(const ExperimentConfig& config);

/// FNV-1a 64 of the compact resolved-config JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

KGrid make_grid(const ExperimentConfig& config);
DispersionSchedule make_dispersion(const ExperimentConfig& config);
FrameRotation make_rotation(const ExperimentConfig& config);
ContinuumModel make_model(const ExperimentConfig& config);
BandPartition make_partition(const ExperimentConfig& config);
GeneratorVariant make_variant(const ExperimentConfig& config);
PropagationConfig make_propagation(const ExperimentConfig& config, double T);

}  // namespace adiabatic::harness
