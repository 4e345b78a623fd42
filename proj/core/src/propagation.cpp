#include "adiabatic/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "adiabatic/errors.hpp"
#include "adiabatic/weyl_bands.hpp"

namespace adiabatic {

namespace {

constexpr double kMaxPhasePerStep = std::numbers::pi / 4.0;
constexpr std::size_t kNormScan = 257;

double hermitian_norm(const Matrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> step_nodes(std::size_t steps) {
  std::vector<double> nodes(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    nodes[n] = static_cast<double>(n) / static_cast<double>(steps);
  }
  return nodes;
}

/// Integrates i dX/ds = G(s) X from X(0) = I, where `generator(s)` already
/// carries every scale factor (T, 1/hbar). `visit(n, X)` sees every node.
template <typename Generator, typename Visitor>
void integrate(std::size_t dim, std::size_t steps, Scheme scheme, Generator&& generator,
               Visitor&& visit) {
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix x = Matrix::Identity(d, d);
  visit(std::size_t{0}, x);
  const double h = 1.0 / static_cast<double>(steps);
  const double r3 = std::sqrt(3.0);
  const double c1 = 0.5 - r3 / 6.0;
  const double c2 = 0.5 + r3 / 6.0;
  const double w1 = 0.25 + r3 / 6.0;
  const double w2 = 0.25 - r3 / 6.0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double s = static_cast<double>(n) * h;
    switch (scheme) {
      case Scheme::midpoint_exponential:
        x = hermitian_propagator(generator(s + 0.5 * h), h) * x;
        break;
      case Scheme::fourth_order_commutator_free: {
        const Matrix g1 = generator(s + c1 * h);
        const Matrix g2 = generator(s + c2 * h);
        const Matrix first = hermitian_propagator(w1 * g1 + w2 * g2, h);
        const Matrix second = hermitian_propagator(w2 * g1 + w1 * g2, h);
        x = second * (first * x);
        break;
      }
    }
    visit(n + 1, x);
  }
}

void check_config(const PropagationConfig& config) {
  if (!(config.T >= 0.0) || !std::isfinite(config.T)) throw InvalidArgument("T must be >= 0");
  if (config.steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(config.hbar > 0.0)) throw InvalidArgument("hbar must be positive");
}

void check_budget(double norm_bound, std::size_t steps, const char* what) {
  const std::size_t required = minimal_steps(norm_bound);
  if (steps < required) {
    std::ostringstream os;
    os << what << ": " << steps << " steps do not resolve the dynamics (need >= " << required
       << " so that ||generator|| ds <= pi/4)";
    throw ResolutionError(os.str(), required);
  }
}

/// C = R^dagger dR/ds, projected onto exact anti-Hermitian form.
Matrix antihermitian_couplings(const ContinuumModel& model, double s) {
  const Matrix c = model.couplings(s);
  return 0.5 * (c - c.adjoint());
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::midpoint_exponential: return "midpoint_exponential";
    case Scheme::fourth_order_commutator_free: return "fourth_order_commutator_free";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "midpoint_exponential") return Scheme::midpoint_exponential;
  if (name == "fourth_order_commutator_free") return Scheme::fourth_order_commutator_free;
  throw InvalidArgument("unknown integration scheme '" + name + "'");
}

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::kato_state: return "kato_state";
    case GeneratorKind::weyl_band: return "weyl_band";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "kato_state") return GeneratorKind::kato_state;
  if (name == "weyl_band") return GeneratorKind::weyl_band;
  throw InvalidArgument("unknown generator variant '" + name + "'");
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::propagator: return "U";
    case FamilyKind::intertwiner: return "A";
    case FamilyKind::phase: return "Phi";
    case FamilyKind::wave: return "W";
  }
  return "unknown";
}

void GeneratorVariant::validate(std::size_t grid_size) const {
  if (kind == GeneratorKind::weyl_band) {
    if (!partition) throw InvalidArgument("weyl_band generator needs a band partition");
    if (partition->grid_size() != grid_size) {
      throw InvalidArgument("generator partition does not match the grid");
    }
  } else if (partition) {
    throw InvalidArgument("kato_state generator takes no partition");
  }
}

bool GeneratorVariant::couples(std::size_t a, std::size_t b) const {
  if (kind == GeneratorKind::kato_state) return a != b;
  return !partition->same_band(a, b);
}

double UnitaryFamily::max_unitarity_defect() const {
  double worst = 0.0;
  for (const auto& m : values) worst = std::max(worst, unitarity_defect(m));
  return worst;
}

std::size_t minimal_steps(double norm_bound) {
  if (!(norm_bound > 0.0)) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(norm_bound / kMaxPhasePerStep)));
}

// ---------------------------------------------------------------------------
// Physical propagator

namespace {

template <typename Visitor>
void run_propagator(const ContinuumModel& model, const PropagationConfig& config,
                    Visitor&& visit) {
  check_config(config);
  check_budget(config.T * model.max_hamiltonian_norm() / config.hbar, config.steps,
               "propagator");
  const double scale = config.T / config.hbar;
  integrate(model.size(), config.steps, config.scheme,
            [&](double s) -> Matrix { return scale * model.hamiltonian(s); },
            std::forward<Visitor>(visit));
}

}  // namespace

UnitaryFamily propagate(const ContinuumModel& model, const PropagationConfig& config) {
  UnitaryFamily fam;
  fam.kind = FamilyKind::propagator;
  fam.nodes = step_nodes(config.steps);
  fam.values.reserve(fam.nodes.size());
  run_propagator(model, config, [&](std::size_t, const Matrix& x) { fam.values.push_back(x); });
  return fam;
}

Matrix propagate_endpoint(const ContinuumModel& model, const PropagationConfig& config) {
  Matrix last;
  run_propagator(model, config, [&](std::size_t n, const Matrix& x) {
    if (n == config.steps) last = x;
  });
  return last;
}

// ---------------------------------------------------------------------------
// Intertwining generator

Matrix generator_frame_elements(const ContinuumModel& model, const GeneratorVariant& variant,
                                double s, double hbar) {
  variant.validate(model.size());
  const Matrix c = antihermitian_couplings(model, s);
  Matrix k = Matrix::Zero(c.rows(), c.cols());
  for (Eigen::Index b = 0; b < c.cols(); ++b) {
    for (Eigen::Index a = 0; a < c.rows(); ++a) {
      if (variant.couples(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) {
        k(a, b) = kI * hbar * c(a, b);
      }
    }
  }
  return k;
}

Matrix intertwining_generator(const ContinuumModel& model, const GeneratorVariant& variant,
                              double s, double hbar) {
  const Matrix r = model.frame(s);
  const Matrix k = r * generator_frame_elements(model, variant, s, hbar) * r.adjoint();
  return 0.5 * (k + k.adjoint());
}

Matrix sliding_window_generator(const ContinuumModel& model, std::size_t m, double s,
                                double hbar) {
  if (m < 1 || m > model.size()) throw InvalidArgument("window size out of range");
  const Matrix c = antihermitian_couplings(model, s);
  Matrix k = Matrix::Zero(c.rows(), c.cols());
  for (Eigen::Index b = 0; b < c.cols(); ++b) {
    for (Eigen::Index a = 0; a < c.rows(); ++a) {
      const bool in_window = a >= b && a < b + static_cast<Eigen::Index>(m);
      if (!in_window) k(a, b) = kI * hbar * c(a, b);
    }
  }
  const Matrix r = model.frame(s);
  return r * k * r.adjoint();
}

double generator_norm_bound(const ContinuumModel& model, const GeneratorVariant& variant,
                            double hbar) {
  double bound = 0.0;
  for (double s : uniform_samples(kNormScan)) {
    bound = std::max(bound, hermitian_norm(generator_frame_elements(model, variant, s, hbar)));
  }
  return bound;
}

UnitaryFamily intertwiner(const ContinuumModel& model, const GeneratorVariant& variant,
                          std::size_t steps, Scheme scheme, double hbar) {
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  variant.validate(model.size());
  check_budget(generator_norm_bound(model, variant, hbar) / hbar, steps, "intertwiner");
  UnitaryFamily fam;
  fam.kind = FamilyKind::intertwiner;
  fam.nodes = step_nodes(steps);
  fam.values.reserve(fam.nodes.size());
  integrate(model.size(), steps, scheme,
            [&](double s) -> Matrix { return intertwining_generator(model, variant, s, hbar) / hbar; },
            [&](std::size_t, const Matrix& x) { fam.values.push_back(x); });
  return fam;
}

double intertwining_residual(const UnitaryFamily& a, const ContinuumModel& model,
                             const BandPartition& bands) {
  if (bands.grid_size() != model.size()) throw InvalidArgument("partition does not match model");
  std::vector<Matrix> initial;
  for (std::size_t b = 0; b < bands.count(); ++b) {
    initial.push_back(band_projector(model, bands, b, 0.0).basis);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Matrix frame = model.frame(a.nodes[i]);
    for (std::size_t b = 0; b < bands.count(); ++b) {
      const IndexRange r = bands.band(b);
      const Matrix basis = frame.middleCols(static_cast<Eigen::Index>(r.begin),
                                            static_cast<Eigen::Index>(r.size()));
      const Matrix transported = a.values[i] * initial[b];
      const Matrix diff = basis * basis.adjoint() - transported * transported.adjoint();
      worst = std::max(worst, hermitian_norm(0.5 * (diff + diff.adjoint())));
    }
  }
  return worst;
}

RotatingPicture rotating_picture(const ContinuumModel& model, const GeneratorVariant& variant,
                                 const UnitaryFamily& a, std::size_t node, double hbar) {
  const Matrix& am = a.at(node);
  const double s = a.nodes[node];
  return {am.adjoint() * model.hamiltonian(s) * am,
          am.adjoint() * intertwining_generator(model, variant, s, hbar) * am};
}

// ---------------------------------------------------------------------------
// Dynamical phase

double dynamical_phase(const ContinuumModel& model, std::size_t j, double s) {
  const double end = checked_s(s);
  const double k = model.grid().node(j);
  if (auto closed = model.dispersion().closed_form_integral(k, end)) return *closed;

  std::vector<double> cuts{0.0};
  for (double knot : model.dispersion().knots()) {
    if (knot > 0.0 && knot < end) cuts.push_back(knot);
  }
  cuts.push_back(end);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    double error = 0.0;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double x) { return model.eigenvalue(j, x); }, cuts[i], cuts[i + 1], 15, 1e-14, &error);
    if (!(error <= 1e-12 * std::max(1.0, std::abs(piece)))) {
      throw NumericalError("adaptive quadrature of the dynamical phase did not converge");
    }
    total += piece;
  }
  return total;
}

Matrix phase_operator(const ContinuumModel& model, double T, double s, double hbar) {
  const auto n = static_cast<Eigen::Index>(model.size());
  Vector phases(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    phases(j) = std::exp(-kI * T * dynamical_phase(model, static_cast<std::size_t>(j), s) / hbar);
  }
  const Matrix r0 = model.frame(0.0);
  return r0 * phases.asDiagonal() * r0.adjoint();
}

UnitaryFamily phase_family(const ContinuumModel& model, double T, const std::vector<double>& nodes,
                           double hbar) {
  UnitaryFamily fam;
  fam.kind = FamilyKind::phase;
  fam.nodes = nodes;
  fam.values.reserve(nodes.size());
  for (double s : nodes) fam.values.push_back(phase_operator(model, T, s, hbar));
  return fam;
}

// ---------------------------------------------------------------------------
// Wave operator

namespace {

void check_shared_grid(const UnitaryFamily& u, const UnitaryFamily& a, const UnitaryFamily& phi) {
  if (u.nodes != a.nodes || u.nodes != phi.nodes) {
    throw InvalidArgument("U, A and Phi families are sampled on different s-grids");
  }
}

}  // namespace

Matrix wave_operator(const UnitaryFamily& u, const UnitaryFamily& a, const UnitaryFamily& phi,
                     std::size_t node) {
  check_shared_grid(u, a, phi);
  return phi.at(node).adjoint() * a.at(node).adjoint() * u.at(node);
}

UnitaryFamily wave_family(const UnitaryFamily& u, const UnitaryFamily& a,
                          const UnitaryFamily& phi) {
  check_shared_grid(u, a, phi);
  UnitaryFamily fam;
  fam.kind = FamilyKind::wave;
  fam.nodes = u.nodes;
  fam.values.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    fam.values.push_back(phi.values[i].adjoint() * a.values[i].adjoint() * u.values[i]);
  }
  return fam;
}

Matrix wave_generator(const ContinuumModel& model, const GeneratorVariant& variant,
                      const UnitaryFamily& a, const UnitaryFamily& phi, std::size_t node,
                      double hbar) {
  if (a.nodes != phi.nodes) throw InvalidArgument("A and Phi families use different s-grids");
  const Matrix ap = a.at(node) * phi.at(node);
  return ap.adjoint() * intertwining_generator(model, variant, a.nodes[node], hbar) * ap;
}

}  // namespace adiabatic
