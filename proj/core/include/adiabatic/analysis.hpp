#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adiabatic/band_partition.hpp"
#include "adiabatic/linalg.hpp"
#include "adiabatic/propagation.hpp"
#include "adiabatic/spectral_model.hpp"

namespace adiabatic {

/// Quadrature panels per oscillation period of exp(i T (alpha_a - alpha_b) / hbar).
inline constexpr double kPanelsPerPeriod = 20.0;
/// Default threshold on max-coupling / min-gap for the validity criterion.
inline constexpr double kDefaultCriterionThreshold = 0.1;

/// <phi_j0(s)|d/ds phi_j(s)>.
Complex coupling(const ContinuumModel& model, std::size_t j0, std::size_t j, double s);

/// Panels needed on [0, s_end] for 20 panels per oscillation period.
std::size_t required_panels(const ContinuumModel& model, std::size_t j0, std::size_t j, double T,
                            double s_end, double hbar = kHbar);

/// F(j0, j, s_end) = int_0^s_end exp(i T (alpha_j0 - alpha_j) / hbar) K^(A)_{j0 j}(s) ds with
/// K^(A)_{j0 j}(s) = <phi_j0(s)|K(s)|phi_j(s)>. Composite 8-point Gauss-Legendre panels;
/// `panels == 0` picks the required count. Exactly zero for pairs the variant
/// does not couple.
Complex transition_amplitude(const ContinuumModel& model, const GeneratorVariant& variant,
                             std::size_t j0, std::size_t j, double T, double s_end,
                             std::size_t panels = 0, double hbar = kHbar);

struct ByPartsAmplitude {
  /// (hbar / iT) [exp(i T dalpha / hbar) K / dE] evaluated between 0 and s_end.
  Complex boundary;
  /// int exp(i T dalpha / hbar) d/ds (K / dE) ds.
  Complex remainder_integral;
  /// boundary - (hbar / iT) * remainder_integral; equals transition_amplitude.
  Complex total;
  /// (hbar / T) (2 max |K / dE| + int |d/ds (K / dE)|).
  double bound = 0.0;
};

/// Integration-by-parts form of transition_amplitude. Requires T > 0 and a
/// level separation bounded away from zero (CrossingError otherwise).
ByPartsAmplitude transition_amplitude_by_parts(const ContinuumModel& model,
                                               const GeneratorVariant& variant, std::size_t j0,
                                               std::size_t j, double T, double s_end,
                                               std::size_t panels = 0, double hbar = kHbar);

/// Probability outside band(j0) at s = 1 for the state U(1) phi_j0(0).
double leakage_exact(const ContinuumModel& model, const Matrix& u_end, const BandPartition& bands,
                     std::size_t j0);
double leakage_exact(const ContinuumModel& model, const UnitaryFamily& u,
                     const BandPartition& bands, std::size_t j0);

/// <phi_j0(0)|W^dagger Q0 W|phi_j0(0)> with Q0 = 1 - P_band(j0)(0).
double leakage_wave_form(const ContinuumModel& model, const Matrix& w_end,
                         const BandPartition& bands, std::size_t j0);

/// sum over j outside band(j0) of |F(j0, j, 1)|^2 / hbar^2.
double leakage_first_order(const ContinuumModel& model, const BandPartition& bands,
                           std::size_t j0, double T, double hbar = kHbar);

/// |i hbar int_{t0}^{t1} exp{(i/hbar) int (E_j0 - E_j) dt'} <phi_j0|d/dt phi_j> dt|^2
/// with t = t0 + s T. Rejects j inside band(j0).
double transition_weight(const ContinuumModel& model, const BandPartition& bands, std::size_t j0,
                         std::size_t j, double T, double hbar = kHbar);

struct MaxEstimate {
  double value = 0.0;
  double s_at_max = 0.0;
};

/// max over sampled t of |hbar <phi_j0|d/dt phi_j> / (E_j0 - E_j)|^2.
MaxEstimate transition_weight_max_estimate(const ContinuumModel& model, const BandPartition& bands,
                                           std::size_t j0, std::size_t j, double T,
                                           std::size_t s_samples, double hbar = kHbar);

struct CriterionReport {
  double T = 0.0;
  /// max over exterior j and sampled t of |<phi_j0|d/dt phi_j>|.
  double max_coupling = 0.0;
  double min_gap = 0.0;
  double margin = 0.0;
  double threshold = kDefaultCriterionThreshold;
  bool satisfied = true;
  double s_at_max_coupling = 0.0;
  double s_at_min_gap = 0.0;
};

CriterionReport criterion(const ContinuumModel& model, const BandPartition& bands, std::size_t j0,
                          double T, std::size_t s_samples,
                          double threshold = kDefaultCriterionThreshold);

struct LeakageReport {
  double T = 0.0;
  std::size_t j0 = 0;
  std::size_t band = 0;
  double eta_exact = 0.0;
  double eta_first_order = 0.0;
  /// ||W(1) - 1||_2.
  double w_deviation = 0.0;
};

/// Builds the report for one T from U(1) and the (T-independent) A(1).
LeakageReport leakage_report(const ContinuumModel& model, const BandPartition& bands,
                             std::size_t j0, double T, const Matrix& u_end, const Matrix& a_end,
                             double hbar = kHbar);

struct ConvergenceFit {
  std::vector<double> T;
  std::vector<double> eta;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (log T, log eta). Needs >= 3 positive points.
ConvergenceFit fit_power_law(const std::vector<double>& T, const std::vector<double>& eta);

enum class FitStatus { ok, trivially_adiabatic };

std::string to_string(FitStatus s);

struct StudyOptions {
  PropagationConfig base;
  GeneratorVariant variant;
  std::size_t jobs = 1;
  double gap_margin = 100.0;
  std::size_t gap_samples = 101;
};

struct ConvergenceStudy {
  std::vector<LeakageReport> runs;
  /// Steps used per run: max(base.steps, minimal steps for that T).
  std::vector<std::size_t> steps;
  /// gap * T >= gap_margin for each run.
  std::vector<bool> gap_margin_ok;
  std::vector<double> excluded_T;
  FitStatus status = FitStatus::ok;
  std::optional<ConvergenceFit> fit;
  double intertwining_residual = 0.0;
};

/// Runs one exact propagation per T (in parallel on `jobs` workers),
/// collects the leakage reports sorted by T and fits log eta against log T.
/// Runs with eta == 0 exactly are excluded from the fit; when every run is
/// exactly zero the status is trivially_adiabatic and no fit is made.
ConvergenceStudy convergence_study(const ContinuumModel& model, const BandPartition& bands,
                                   std::size_t j0, std::vector<double> T_list,
                                   const StudyOptions& options);

}  // namespace adiabatic
