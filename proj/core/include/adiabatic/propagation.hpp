#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adiabatic/band_partition.hpp"
#include "adiabatic/linalg.hpp"
#include "adiabatic/spectral_model.hpp"

namespace adiabatic {

enum class Scheme {
  /// exp(-i dt G(s + dt/2)); second order.
  midpoint_exponential,
  /// Two-exponential commutator-free Magnus scheme on Gauss nodes; fourth order.
  fourth_order_commutator_free,
};

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct PropagationConfig {
  double T = 0.0;
  std::size_t steps = 4000;
  Scheme scheme = Scheme::midpoint_exponential;
  double hbar = kHbar;
};

enum class GeneratorKind {
  /// Rank-one projectors per state: K = i hbar sum_j (1 - P_j)|phi_j'><phi_j|.
  kato_state,
  /// Fixed partition bands: couplings inside a band are removed.
  weyl_band,
};

std::string to_string(GeneratorKind k);
GeneratorKind parse_generator_kind(const std::string& name);

struct GeneratorVariant {
  GeneratorKind kind = GeneratorKind::kato_state;
  std::optional<BandPartition> partition;

  static GeneratorVariant kato_state() { return {}; }
  static GeneratorVariant weyl_band(BandPartition p) { return {GeneratorKind::weyl_band, std::move(p)}; }

  /// Throws unless the partition is present exactly for weyl_band.
  void validate(std::size_t grid_size) const;
  /// True when the generator keeps the (a, b) frame coupling.
  bool couples(std::size_t a, std::size_t b) const;
};

enum class FamilyKind { propagator, intertwiner, phase, wave };

std::string to_string(FamilyKind k);

/// A unitary-valued function of s sampled on a uniform grid.
struct UnitaryFamily {
  FamilyKind kind = FamilyKind::propagator;
  std::vector<double> nodes;
  std::vector<Matrix> values;

  std::size_t size() const noexcept { return nodes.size(); }
  const Matrix& at(std::size_t i) const { return values.at(i); }
  const Matrix& back() const { return values.back(); }
  double max_unitarity_defect() const;
};

/// Smallest step count with norm_bound * (1 / steps) <= pi / 4.
std::size_t minimal_steps(double norm_bound);

/// Solves i hbar dU/ds = T H(s) U, U(0) = I on steps + 1 uniform nodes.
/// Throws ResolutionError when T ||H|| ds / hbar exceeds pi / 4.
UnitaryFamily propagate(const ContinuumModel& model, const PropagationConfig& config);

/// Same integration keeping only U(1).
Matrix propagate_endpoint(const ContinuumModel& model, const PropagationConfig& config);

/// Frame-basis matrix elements <phi_a(s)|K(s)|phi_b(s)>. Entries the variant
/// removes are exactly zero.
Matrix generator_frame_elements(const ContinuumModel& model, const GeneratorVariant& variant,
                                double s, double hbar = kHbar);

/// K(s) in the fixed (lab) basis. Hermitian.
Matrix intertwining_generator(const ContinuumModel& model, const GeneratorVariant& variant,
                              double s, double hbar = kHbar);

/// The sliding-window reading of the supplementary condition, which zeroes
/// <phi_k|K|phi_k'> for k' in [k, k + m - 1] only. Generally not Hermitian;
/// kept as a diagnostic.
Matrix sliding_window_generator(const ContinuumModel& model, std::size_t m, double s,
                                double hbar = kHbar);

/// max over a uniform s-scan of ||K(s)||_2.
double generator_norm_bound(const ContinuumModel& model, const GeneratorVariant& variant,
                            double hbar = kHbar);

/// Solves i hbar dA/ds = K(s) A, A(0) = I. T-independent.
UnitaryFamily intertwiner(const ContinuumModel& model, const GeneratorVariant& variant,
                          std::size_t steps, Scheme scheme = Scheme::midpoint_exponential,
                          double hbar = kHbar);

/// max over bands and nodes of ||P_b(s) - A(s) P_b(0) A(s)^dagger||_2.
double intertwining_residual(const UnitaryFamily& a, const ContinuumModel& model,
                             const BandPartition& bands);

struct RotatingPicture {
  Matrix hamiltonian;
  Matrix generator;
};

/// H^(A) = A^dagger H A and K^(A) = A^dagger K A at node `node` of `a`.
RotatingPicture rotating_picture(const ContinuumModel& model, const GeneratorVariant& variant,
                                 const UnitaryFamily& a, std::size_t node, double hbar = kHbar);

/// alpha_j(s) = integral of E(k_j, s') over [0, s].
double dynamical_phase(const ContinuumModel& model, std::size_t j, double s);

/// Phi_T(s) = sum_j exp(-i T alpha_j(s) / hbar) |phi_j(0)><phi_j(0)|.
Matrix phase_operator(const ContinuumModel& model, double T, double s, double hbar = kHbar);

UnitaryFamily phase_family(const ContinuumModel& model, double T, const std::vector<double>& nodes,
                           double hbar = kHbar);

/// W(s) = Phi^dagger(s) A^dagger(s) U(s) at node `node`; the three families
/// must share their s-grid.
Matrix wave_operator(const UnitaryFamily& u, const UnitaryFamily& a, const UnitaryFamily& phi,
                     std::size_t node);

UnitaryFamily wave_family(const UnitaryFamily& u, const UnitaryFamily& a,
                          const UnitaryFamily& phi);

/// Kbar = Phi^dagger A^dagger K A Phi. W obeys i hbar dW/ds = -Kbar W.
Matrix wave_generator(const ContinuumModel& model, const GeneratorVariant& variant,
                      const UnitaryFamily& a, const UnitaryFamily& phi, std::size_t node,
                      double hbar = kHbar);

}  // namespace adiabatic
