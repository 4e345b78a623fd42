#include "adiabatic/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "adiabatic/errors.hpp"

namespace adiabatic {

namespace {

constexpr std::size_t kDegeneracyScan = 1025;
constexpr double kSlack = 1e-12;

std::vector<double> scan_points(const DispersionSchedule& d) {
  auto pts = uniform_samples(kDegeneracyScan);
  for (double k : d.knots()) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

void require_grid_match(const KGrid& grid, const DispersionSchedule& d) {
  if (auto n = d.required_grid_size(); n && *n != grid.size()) {
    std::ostringstream os;
    os << "tabulated dispersion has " << *n << " columns but the grid has " << grid.size()
       << " nodes";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

double checked_s(double s) {
  if (!(s >= -kSlack && s <= 1.0 + kSlack)) {
    std::ostringstream os;
    os << "normalized time s=" << s << " outside [0, 1]";
    throw InvalidArgument(os.str());
  }
  return std::clamp(s, 0.0, 1.0);
}

std::vector<double> uniform_samples(std::size_t n) {
  if (n < 2) throw InvalidArgument("need at least 2 s-samples");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// KGrid

KGrid::KGrid(double k_min, double k_max, std::size_t n) : k_min_(k_min), k_max_(k_max) {
  if (n < 2) throw InvalidArgument("grid needs N >= 2");
  if (!std::isfinite(k_min) || !std::isfinite(k_max) || !(k_max > k_min)) {
    throw InvalidArgument("grid needs finite k_min < k_max");
  }
  spacing_ = (k_max - k_min) / static_cast<double>(n - 1);
  nodes_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    nodes_[j] = k_min + spacing_ * static_cast<double>(j);
  }
  nodes_.back() = k_max;
}

double KGrid::node(std::size_t j) const {
  if (j >= nodes_.size()) throw InvalidArgument("grid index out of range");
  return nodes_[j];
}

// ---------------------------------------------------------------------------
// DispersionSchedule

std::string to_string(DispersionFamily f) {
  switch (f) {
    case DispersionFamily::linear: return "linear";
    case DispersionFamily::quadratic: return "quadratic";
    case DispersionFamily::tabulated: return "tabulated";
  }
  return "unknown";
}

DispersionFamily parse_dispersion_family(const std::string& name) {
  if (name == "linear") return DispersionFamily::linear;
  if (name == "quadratic") return DispersionFamily::quadratic;
  if (name == "tabulated") return DispersionFamily::tabulated;
  throw InvalidArgument("unknown dispersion family '" + name + "'");
}

DispersionSchedule DispersionSchedule::linear(Coefficients c) {
  DispersionSchedule d;
  d.family_ = DispersionFamily::linear;
  d.coeffs_ = c;
  return d;
}

DispersionSchedule DispersionSchedule::quadratic(Coefficients c) {
  DispersionSchedule d;
  d.family_ = DispersionFamily::quadratic;
  d.coeffs_ = c;
  return d;
}

DispersionSchedule DispersionSchedule::tabulated(std::vector<std::vector<double>> table) {
  if (table.size() < 2) throw InvalidArgument("tabulated dispersion needs >= 2 s-knots");
  const std::size_t width = table.front().size();
  if (width == 0) throw InvalidArgument("tabulated dispersion rows are empty");
  for (const auto& row : table) {
    if (row.size() != width) throw InvalidArgument("tabulated dispersion rows differ in length");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidArgument("tabulated dispersion has non-finite entry");
    }
  }
  DispersionSchedule d;
  d.family_ = DispersionFamily::tabulated;
  d.table_ = std::move(table);
  return d;
}

std::optional<std::size_t> DispersionSchedule::required_grid_size() const {
  if (family_ != DispersionFamily::tabulated) return std::nullopt;
  return table_.front().size();
}

std::vector<double> DispersionSchedule::knots() const {
  if (family_ != DispersionFamily::tabulated) return {};
  return uniform_samples(table_.size());
}

double DispersionSchedule::energy(double k, std::size_t j, double s) const {
  switch (family_) {
    case DispersionFamily::linear:
      return (coeffs_.a0 + coeffs_.a1 * s) * k + (coeffs_.b0 + coeffs_.b1 * s);
    case DispersionFamily::quadratic:
      return (coeffs_.a0 + coeffs_.a1 * s) * k * k + (coeffs_.b0 + coeffs_.b1 * s);
    case DispersionFamily::tabulated: {
      const double segments = static_cast<double>(table_.size() - 1);
      const double x = s * segments;
      const std::size_t i = std::min(static_cast<std::size_t>(x), table_.size() - 2);
      const double t = x - static_cast<double>(i);
      return (1.0 - t) * table_[i].at(j) + t * table_[i + 1].at(j);
    }
  }
  return 0.0;
}

double DispersionSchedule::energy_rate(double k, std::size_t j, double s) const {
  switch (family_) {
    case DispersionFamily::linear:
      return coeffs_.a1 * k + coeffs_.b1;
    case DispersionFamily::quadratic:
      return coeffs_.a1 * k * k + coeffs_.b1;
    case DispersionFamily::tabulated: {
      const double segments = static_cast<double>(table_.size() - 1);
      const std::size_t i = std::min(static_cast<std::size_t>(s * segments), table_.size() - 2);
      return (table_[i + 1].at(j) - table_[i].at(j)) * segments;
    }
  }
  return 0.0;
}

double DispersionSchedule::energy_curvature(double, std::size_t, double) const { return 0.0; }

std::optional<double> DispersionSchedule::closed_form_integral(double k, double s) const {
  const double amp = coeffs_.a0 * s + 0.5 * coeffs_.a1 * s * s;
  const double shift = coeffs_.b0 * s + 0.5 * coeffs_.b1 * s * s;
  switch (family_) {
    case DispersionFamily::linear: return amp * k + shift;
    case DispersionFamily::quadratic: return amp * k * k + shift;
    case DispersionFamily::tabulated: return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// AngleSchedule

std::string to_string(AngleProfile p) {
  switch (p) {
    case AngleProfile::cubic: return "cubic";
    case AngleProfile::smoothstep: return "smoothstep";
    case AngleProfile::linear: return "linear";
  }
  return "unknown";
}

AngleProfile parse_angle_profile(const std::string& name) {
  if (name == "cubic") return AngleProfile::cubic;
  if (name == "smoothstep") return AngleProfile::smoothstep;
  if (name == "linear") return AngleProfile::linear;
  throw InvalidArgument("unknown angle profile '" + name + "'");
}

AngleSchedule::AngleSchedule(AngleProfile profile, double theta_max)
    : profile_(profile), theta_max_(theta_max) {
  if (!std::isfinite(theta_max)) throw InvalidArgument("theta_max must be finite");
}

double AngleSchedule::angle(double s) const {
  switch (profile_) {
    case AngleProfile::cubic: return theta_max_ * s * s * s;
    case AngleProfile::smoothstep: return theta_max_ * s * s * (3.0 - 2.0 * s);
    case AngleProfile::linear: return theta_max_ * s;
  }
  return 0.0;
}

double AngleSchedule::rate(double s) const {
  switch (profile_) {
    case AngleProfile::cubic: return 3.0 * theta_max_ * s * s;
    case AngleProfile::smoothstep: return 6.0 * theta_max_ * s * (1.0 - s);
    case AngleProfile::linear: return theta_max_;
  }
  return 0.0;
}

double AngleSchedule::acceleration(double s) const {
  switch (profile_) {
    case AngleProfile::cubic: return 6.0 * theta_max_ * s;
    case AngleProfile::smoothstep: return 6.0 * theta_max_ * (1.0 - 2.0 * s);
    case AngleProfile::linear: return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// FrameRotation

std::string to_string(RotationBuilder b) {
  switch (b) {
    case RotationBuilder::nearest_neighbor: return "nearest_neighbor";
    case RotationBuilder::banded: return "banded";
    case RotationBuilder::random_banded: return "random_banded";
    case RotationBuilder::custom: return "custom";
  }
  return "unknown";
}

RotationBuilder parse_rotation_builder(const std::string& name) {
  if (name == "nearest_neighbor") return RotationBuilder::nearest_neighbor;
  if (name == "banded") return RotationBuilder::banded;
  if (name == "random_banded") return RotationBuilder::random_banded;
  throw InvalidArgument("unknown rotation builder '" + name + "'");
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

FrameRotation FrameRotation::nearest_neighbor(std::size_t n, AngleSchedule schedule) {
  FrameRotation r = banded(n, 1, schedule);
  r.builder = RotationBuilder::nearest_neighbor;
  return r;
}

FrameRotation FrameRotation::banded(std::size_t n, std::size_t bandwidth, AngleSchedule schedule) {
  if (bandwidth < 1) throw InvalidArgument("rotation bandwidth must be >= 1");
  FrameRotation r;
  r.builder = RotationBuilder::banded;
  r.bandwidth = bandwidth;
  r.schedule = schedule;
  r.generator = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t d = 1; d <= bandwidth; ++d) {
    for (std::size_t j = 0; j + d < n; ++j) {
      const double v = 1.0 / static_cast<double>(d);
      r.generator(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + d)) = v;
      r.generator(static_cast<Eigen::Index>(j + d), static_cast<Eigen::Index>(j)) = -v;
    }
  }
  return r;
}

FrameRotation FrameRotation::random_banded(std::size_t n, std::size_t bandwidth,
                                           std::uint64_t seed, AngleSchedule schedule) {
  if (bandwidth < 1) throw InvalidArgument("rotation bandwidth must be >= 1");
  FrameRotation r;
  r.builder = RotationBuilder::random_banded;
  r.bandwidth = bandwidth;
  r.seed = seed;
  r.schedule = schedule;
  r.generator = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  SplitMix64 rng(seed);
  // Row-major over the upper band so the stream order is fixed.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 1; d <= bandwidth && j + d < n; ++d) {
      const double v = 2.0 * rng.uniform() - 1.0;
      r.generator(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + d)) = v;
      r.generator(static_cast<Eigen::Index>(j + d), static_cast<Eigen::Index>(j)) = -v;
    }
  }
  return r;
}

FrameRotation FrameRotation::custom(Matrix generator, AngleSchedule schedule) {
  FrameRotation r;
  r.builder = RotationBuilder::custom;
  r.generator = std::move(generator);
  r.schedule = schedule;
  return r;
}

// ---------------------------------------------------------------------------
// ContinuumModel

ContinuumModel::ContinuumModel(KGrid grid, DispersionSchedule dispersion, FrameRotation rotation)
    : grid_(std::move(grid)), dispersion_(std::move(dispersion)), rotation_(std::move(rotation)) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kI * rotation_.generator);
  generator_vectors_ = eig.eigenvectors();
  generator_values_ = eig.eigenvalues();
  double norm = 0.0;
  for (double s : scan_points(dispersion_)) {
    for (std::size_t j = 0; j < size(); ++j) norm = std::max(norm, std::abs(eigenvalue(j, s)));
  }
  max_norm_ = norm;
}

void ContinuumModel::check_index(std::size_t j) const {
  if (j >= size()) {
    std::ostringstream os;
    os << "band index j=" << j << " outside grid of size " << size();
    throw InvalidArgument(os.str());
  }
}

double ContinuumModel::eigenvalue(std::size_t j, double s) const {
  check_index(j);
  return dispersion_.energy(grid_.nodes()[j], j, checked_s(s));
}

double ContinuumModel::eigenvalue_rate(std::size_t j, double s) const {
  check_index(j);
  return dispersion_.energy_rate(grid_.nodes()[j], j, checked_s(s));
}

double ContinuumModel::eigenvalue_curvature(std::size_t j, double s) const {
  check_index(j);
  return dispersion_.energy_curvature(grid_.nodes()[j], j, checked_s(s));
}

RealVector ContinuumModel::eigenvalues(double s) const {
  RealVector e(static_cast<Eigen::Index>(size()));
  for (std::size_t j = 0; j < size(); ++j) e(static_cast<Eigen::Index>(j)) = eigenvalue(j, s);
  return e;
}

Vector ContinuumModel::rotate(const Vector& v, double theta) const {
  if (theta == 0.0) return v;
  Vector coeffs = generator_vectors_.adjoint() * v;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    coeffs(i) *= std::exp(-kI * theta * generator_values_(i));
  }
  return generator_vectors_ * coeffs;
}

Matrix ContinuumModel::frame(double s) const {
  const double theta = rotation_.schedule.angle(checked_s(s));
  const auto n = static_cast<Eigen::Index>(size());
  if (theta == 0.0) return Matrix::Identity(n, n);
  Vector phases(n);
  for (Eigen::Index i = 0; i < n; ++i) phases(i) = std::exp(-kI * theta * generator_values_(i));
  return generator_vectors_ * phases.asDiagonal() * generator_vectors_.adjoint();
}

Matrix ContinuumModel::frame_derivative(double s) const {
  const double rate = rotation_.schedule.rate(checked_s(s));
  return rate * (rotation_.generator * frame(s));
}

Vector ContinuumModel::frame_vector(std::size_t j, double s) const {
  check_index(j);
  const double theta = rotation_.schedule.angle(checked_s(s));
  Vector e = Vector::Zero(static_cast<Eigen::Index>(size()));
  e(static_cast<Eigen::Index>(j)) = 1.0;
  return rotate(e, theta);
}

Vector ContinuumModel::frame_velocity(std::size_t j, double s) const {
  const double rate = rotation_.schedule.rate(checked_s(s));
  return rate * (rotation_.generator * frame_vector(j, s));
}

Vector ContinuumModel::frame_acceleration(std::size_t j, double s) const {
  const double sc = checked_s(s);
  const double rate = rotation_.schedule.rate(sc);
  const double accel = rotation_.schedule.acceleration(sc);
  const Vector g_phi = rotation_.generator * frame_vector(j, sc);
  return accel * g_phi + rate * rate * (rotation_.generator * g_phi);
}

Matrix ContinuumModel::couplings(double s) const {
  return rotation_.schedule.rate(checked_s(s)) * rotation_.generator;
}

Complex ContinuumModel::coupling(std::size_t a, std::size_t b, double s) const {
  check_index(a);
  check_index(b);
  return rotation_.schedule.rate(checked_s(s)) *
         rotation_.generator(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

Complex ContinuumModel::coupling_rate(std::size_t a, std::size_t b, double s) const {
  check_index(a);
  check_index(b);
  return rotation_.schedule.acceleration(checked_s(s)) *
         rotation_.generator(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

Matrix ContinuumModel::hamiltonian(double s) const {
  const Matrix r = frame(s);
  const RealVector e = eigenvalues(s);
  Matrix h = r * e.cast<Complex>().asDiagonal() * r.adjoint();
  // Symmetrize away roundoff so downstream eigensolvers see an exactly
  // Hermitian matrix.
  return 0.5 * (h + h.adjoint());
}

double ContinuumModel::max_hamiltonian_norm() const { return max_norm_; }

ContinuumModel ContinuumModel::with_theta_max(double theta_max) const {
  FrameRotation r = rotation_;
  r.schedule = AngleSchedule(r.schedule.profile(), theta_max);
  return ContinuumModel(grid_, dispersion_, std::move(r));
}

ContinuumModel build_model(KGrid grid, DispersionSchedule dispersion, FrameRotation rotation) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (rotation.generator.rows() != n || rotation.generator.cols() != n) {
    std::ostringstream os;
    os << "rotation generator is " << rotation.generator.rows() << "x" << rotation.generator.cols()
       << " but the grid has N=" << n;
    throw InvalidArgument(os.str());
  }
  require_grid_match(grid, dispersion);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (rotation.generator(j, j) != Complex{}) {
      throw InvalidArgument("rotation generator must have an exactly zero diagonal");
    }
  }
  if (max_abs(rotation.generator + rotation.generator.adjoint()) > 1e-14) {
    throw InvalidArgument("rotation generator must be anti-Hermitian");
  }
  if (!rotation.generator.allFinite()) throw InvalidArgument("rotation generator not finite");

  // Non-degeneracy: strictly monotone energies in j with one orientation for
  // all s. A flip of orientation between samples is a crossing in between.
  int orientation = 0;
  for (double s : scan_points(dispersion)) {
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double diff = dispersion.energy(grid.nodes()[ju + 1], ju + 1, s) -
                          dispersion.energy(grid.nodes()[ju], ju, s);
      if (!std::isfinite(diff)) throw InvalidArgument("dispersion produced a non-finite energy");
      if (std::abs(diff) <= kCrossingTolerance) {
        std::ostringstream os;
        os << "degenerate spectrum: E(k_" << j << ") and E(k_" << j + 1 << ") meet at s=" << s;
        throw CrossingError(os.str(), s);
      }
      const int sign = diff > 0 ? 1 : -1;
      if (orientation == 0) orientation = sign;
      if (sign != orientation) {
        std::ostringstream os;
        os << "level crossing: dispersion changes orientation near s=" << s;
        throw CrossingError(os.str(), s);
      }
    }
  }
  return ContinuumModel(std::move(grid), std::move(dispersion), std::move(rotation));
}

// ---------------------------------------------------------------------------
// Non-crossing scan

NoncrossingReport validate_noncrossing(const KGrid& grid, const DispersionSchedule& dispersion,
                                       const BandPartition& partition, std::size_t s_samples) {
  if (partition.grid_size() != grid.size()) {
    throw InvalidArgument("partition does not match the grid size");
  }
  require_grid_match(grid, dispersion);
  const auto samples = uniform_samples(s_samples);
  const std::size_t n = grid.size();

  std::vector<std::vector<double>> energies(samples.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      energies[i][j] = dispersion.energy(grid.nodes()[j], j, samples[i]);
    }
  }

  NoncrossingReport report;
  report.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < partition.count(); ++b) {
    const IndexRange band = partition.band(b);
    NoncrossingReport::Band entry;
    entry.band = b;
    entry.min_separation = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> first_bad;
    std::optional<std::size_t> last_bad;
    auto mark = [&](std::size_t lo, std::size_t hi) {
      first_bad = first_bad ? std::min(*first_bad, lo) : lo;
      last_bad = last_bad ? std::max(*last_bad, hi) : hi;
    };
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = band.begin; j < band.end; ++j) {
        for (std::size_t jp = 0; jp < n; ++jp) {
          if (band.contains(jp)) continue;
          const double diff = energies[i][j] - energies[i][jp];
          const double sep = std::abs(diff);
          if (sep < entry.min_separation) {
            entry.min_separation = sep;
            entry.s_at_min = samples[i];
          }
          if (sep <= kCrossingTolerance) {
            mark(i > 0 ? i - 1 : 0, std::min(i + 1, samples.size() - 1));
          }
          if (i > 0) {
            const double prev = energies[i - 1][j] - energies[i - 1][jp];
            if ((prev > kCrossingTolerance && diff < -kCrossingTolerance) ||
                (prev < -kCrossingTolerance && diff > kCrossingTolerance)) {
              mark(i - 1, i);
            }
          }
        }
      }
    }
    if (first_bad) {
      entry.crossing = true;
      entry.interval = std::make_pair(samples[*first_bad], samples[*last_bad]);
      report.ok = false;
      if (!report.interval) {
        report.interval = entry.interval;
      } else {
        report.interval->first = std::min(report.interval->first, entry.interval->first);
        report.interval->second = std::max(report.interval->second, entry.interval->second);
      }
    }
    report.min_separation = std::min(report.min_separation, entry.min_separation);
    report.bands.push_back(entry);
  }
  return report;
}

NoncrossingReport validate_noncrossing(const ContinuumModel& model, const BandPartition& partition,
                                       std::size_t s_samples) {
  return validate_noncrossing(model.grid(), model.dispersion(), partition, s_samples);
}

}  // namespace adiabatic
