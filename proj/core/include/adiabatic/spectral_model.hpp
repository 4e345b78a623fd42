#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adiabatic/band_partition.hpp"
#include "adiabatic/linalg.hpp"

namespace adiabatic {

/// Levels closer than this are treated as degenerate (crossing).
inline constexpr double kCrossingTolerance = 1e-9;

/// Uniform grid of the continuous spectral label k.
class KGrid {
 public:
  KGrid(double k_min, double k_max, std::size_t n);

  std::size_t size() const noexcept { return nodes_.size(); }
  double k_min() const noexcept { return k_min_; }
  double k_max() const noexcept { return k_max_; }
  double spacing() const noexcept { return spacing_; }
  double node(std::size_t j) const;
  const std::vector<double>& nodes() const noexcept { return nodes_; }

 private:
  double k_min_;
  double k_max_;
  double spacing_;
  std::vector<double> nodes_;
};

enum class DispersionFamily { linear, quadratic, tabulated };

std::string to_string(DispersionFamily f);
DispersionFamily parse_dispersion_family(const std::string& name);

/// Energy schedule E(k, s).
///
/// Polynomial families read E = (a0 + a1 s) k^p + (b0 + b1 s) with p = 1
/// (linear) or p = 2 (quadratic). The tabulated family stores E at every
/// grid node on uniformly spaced s-knots and interpolates linearly in s, so
/// it is only piecewise differentiable.
class DispersionSchedule {
 public:
  struct Coefficients {
    double a0 = 1.0;
    double a1 = 1.0;
    double b0 = 0.0;
    double b1 = 0.0;
  };

  static DispersionSchedule linear(Coefficients c);
  static DispersionSchedule quadratic(Coefficients c);
  /// `table[i][j]` is E(k_j, s_i) with s_i = i / (table.size() - 1).
  static DispersionSchedule tabulated(std::vector<std::vector<double>> table);

  DispersionFamily family() const noexcept { return family_; }
  const Coefficients& coefficients() const noexcept { return coeffs_; }
  const std::vector<std::vector<double>>& table() const noexcept { return table_; }

  /// Number of grid nodes the schedule is tied to (tabulated only).
  std::optional<std::size_t> required_grid_size() const;

  /// s-values where the tabulated schedule has kinks (empty otherwise).
  std::vector<double> knots() const;

  double energy(double k, std::size_t j, double s) const;
  /// dE/ds. At a tabulated knot the right-hand slope is returned (left at s=1).
  double energy_rate(double k, std::size_t j, double s) const;
  /// d^2E/ds^2 (zero for every supported family away from kinks).
  double energy_curvature(double k, std::size_t j, double s) const;
  /// Closed-form integral of E over [0, s] for the polynomial families.
  std::optional<double> closed_form_integral(double k, double s) const;

 private:
  DispersionFamily family_ = DispersionFamily::linear;
  Coefficients coeffs_{};
  std::vector<std::vector<double>> table_;
};

enum class AngleProfile { cubic, smoothstep, linear };

std::string to_string(AngleProfile p);
AngleProfile parse_angle_profile(const std::string& name);

/// Rotation angle theta(s) = theta_max * f(s) with f(0) = 0.
///   cubic:      f = s^3
///   smoothstep: f = s^2 (3 - 2 s)
///   linear:     f = s
class AngleSchedule {
 public:
  AngleSchedule() = default;
  AngleSchedule(AngleProfile profile, double theta_max);

  AngleProfile profile() const noexcept { return profile_; }
  double theta_max() const noexcept { return theta_max_; }

  double angle(double s) const;
  double rate(double s) const;
  double acceleration(double s) const;

 private:
  AngleProfile profile_ = AngleProfile::cubic;
  double theta_max_ = 0.0;
};

enum class RotationBuilder { nearest_neighbor, banded, random_banded, custom };

std::string to_string(RotationBuilder b);
RotationBuilder parse_rotation_builder(const std::string& name);

/// Anti-Hermitian generator G with zero diagonal plus the angle schedule;
/// the eigenframe is exp(theta(s) G).
struct FrameRotation {
  RotationBuilder builder = RotationBuilder::nearest_neighbor;
  Matrix generator;
  AngleSchedule schedule;
  std::size_t bandwidth = 1;
  std::uint64_t seed = 0;

  /// G_{j,j+1} = 1, G_{j+1,j} = -1.
  static FrameRotation nearest_neighbor(std::size_t n, AngleSchedule schedule);
  /// G_{j,j+d} = 1/d, G_{j+d,j} = -1/d for 1 <= d <= bandwidth.
  static FrameRotation banded(std::size_t n, std::size_t bandwidth, AngleSchedule schedule);
  /// Real antisymmetric entries within the band drawn uniformly from
  /// [-1, 1) by a splitmix64 stream seeded with `seed`.
  static FrameRotation random_banded(std::size_t n, std::size_t bandwidth, std::uint64_t seed,
                                     AngleSchedule schedule);
  static FrameRotation custom(Matrix generator, AngleSchedule schedule);
};

/// splitmix64 generator (Steele, Lea, Flood). Reproducible on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform();

 private:
  std::uint64_t state_;
};

/// Discretized quasi-continuum: H(s) = sum_j E(k_j, s) |phi_j(s)><phi_j(s)|
/// with phi_j(s) = exp(theta(s) G) e_j. Immutable once built.
class ContinuumModel {
 public:
  const KGrid& grid() const noexcept { return grid_; }
  const DispersionSchedule& dispersion() const noexcept { return dispersion_; }
  const FrameRotation& rotation() const noexcept { return rotation_; }
  std::size_t size() const noexcept { return grid_.size(); }

  double eigenvalue(std::size_t j, double s) const;
  double eigenvalue_rate(std::size_t j, double s) const;
  double eigenvalue_curvature(std::size_t j, double s) const;
  RealVector eigenvalues(double s) const;

  /// exp(theta G); columns are the frame vectors.
  Matrix frame(double s) const;
  /// d/ds of frame(s).
  Matrix frame_derivative(double s) const;
  Vector frame_vector(std::size_t j, double s) const;
  Vector frame_velocity(std::size_t j, double s) const;
  Vector frame_acceleration(std::size_t j, double s) const;

  /// C_ab = <phi_a(s)|d/ds phi_b(s)>. Anti-Hermitian. The generator commutes
  /// with exp(theta G), so this is theta'(s) G without touching the frame.
  Matrix couplings(double s) const;
  Complex coupling(std::size_t a, std::size_t b, double s) const;
  /// d/ds C_ab = theta''(s) G_ab.
  Complex coupling_rate(std::size_t a, std::size_t b, double s) const;

  Matrix hamiltonian(double s) const;

  /// Upper bound of ||H(s)||_2 over [0, 1] (max |E| on a dense s-scan plus knots).
  double max_hamiltonian_norm() const;

  /// Same model with the rotation angle scaled to `theta_max`.
  ContinuumModel with_theta_max(double theta_max) const;

 private:
  friend ContinuumModel build_model(KGrid, DispersionSchedule, FrameRotation);
  ContinuumModel(KGrid grid, DispersionSchedule dispersion, FrameRotation rotation);

  void check_index(std::size_t j) const;
  /// exp(theta G) applied to a vector.
  Vector rotate(const Vector& v, double theta) const;

  KGrid grid_;
  DispersionSchedule dispersion_;
  FrameRotation rotation_;
  // i G = V diag(lambda) V^dagger
  Matrix generator_vectors_;
  RealVector generator_values_;
  double max_norm_ = 0.0;
};

/// Validates and assembles a model. Throws InvalidArgument on dimension or
/// gauge violations and CrossingError when the spectrum degenerates.
ContinuumModel build_model(KGrid grid, DispersionSchedule dispersion, FrameRotation rotation);

/// Checks s in [0, 1] (with a 1e-12 slack) and returns it clamped.
double checked_s(double s);

/// Uniform samples 0, 1/(n-1), ..., 1.
std::vector<double> uniform_samples(std::size_t n);

struct NoncrossingReport {
  struct Band {
    std::size_t band = 0;
    double min_separation = 0.0;
    double s_at_min = 0.0;
    bool crossing = false;
    /// Sample-aligned bracket of the crossing, when one was found.
    std::optional<std::pair<double, double>> interval;
  };
  std::vector<Band> bands;
  double min_separation = 0.0;
  bool ok = true;
  std::optional<std::pair<double, double>> interval;
};

/// Scans s_samples uniform points and reports, per band, the smallest
/// in-band/out-of-band energy separation. A band crosses when that
/// separation drops to kCrossingTolerance or when any in/out pair swaps order
/// between consecutive samples. Works on unvalidated schedules on purpose.
NoncrossingReport validate_noncrossing(const KGrid& grid, const DispersionSchedule& dispersion,
                                       const BandPartition& partition, std::size_t s_samples);
NoncrossingReport validate_noncrossing(const ContinuumModel& model, const BandPartition& partition,
                                       std::size_t s_samples);

}  // namespace adiabatic
