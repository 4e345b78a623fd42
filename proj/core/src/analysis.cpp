#include "adiabatic/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>

#include "adiabatic/errors.hpp"
#include "adiabatic/weyl_bands.hpp"

namespace adiabatic {

namespace {

using GaussRule = boost::math::quadrature::gauss<double, 8>;

constexpr std::size_t kMinPanels = 16;
constexpr std::size_t kSeparationScan = 257;

void check_pair(const ContinuumModel& model, std::size_t j0, std::size_t j) {
  if (j0 >= model.size() || j >= model.size()) throw InvalidArgument("state index out of range");
}

std::vector<std::size_t> exterior_of(const BandPartition& bands, std::size_t j0) {
  const IndexRange r = bands.band(bands.band_of(j0));
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < bands.grid_size(); ++j) {
    if (!r.contains(j)) out.push_back(j);
  }
  if (out.empty()) throw NoExteriorError("band of the initial state has no exterior states");
  return out;
}

double level_gap(const ContinuumModel& model, std::size_t j0, std::size_t j, double s) {
  return model.eigenvalue(j0, s) - model.eigenvalue(j, s);
}

double phase_difference(const ContinuumModel& model, std::size_t j0, std::size_t j, double s) {
  return dynamical_phase(model, j0, s) - dynamical_phase(model, j, s);
}

/// <phi_a|K|phi_b> / (i hbar) and its s-derivative, antisymmetrized in (a, b)
/// the same way generator_frame_elements is.
struct FrameCoupling {
  Complex value;
  Complex rate;
};

FrameCoupling frame_coupling(const ContinuumModel& model, std::size_t a, std::size_t b, double s,
                             bool with_rate) {
  FrameCoupling out;
  out.value = 0.5 * (model.coupling(a, b, s) - std::conj(model.coupling(b, a, s)));
  if (with_rate) {
    out.rate = 0.5 * (model.coupling_rate(a, b, s) - std::conj(model.coupling_rate(b, a, s)));
  }
  return out;
}

double max_separation(const ContinuumModel& model, std::size_t j0, std::size_t j, double s_end) {
  double worst = 0.0;
  std::vector<double> pts = uniform_samples(kSeparationScan);
  for (double k : model.dispersion().knots()) pts.push_back(k);
  for (double x : pts) {
    worst = std::max(worst, std::abs(level_gap(model, j0, j, x * s_end)));
  }
  return worst;
}

std::size_t resolve_panels(const ContinuumModel& model, std::size_t j0, std::size_t j, double T,
                           double s_end, std::size_t panels, double hbar) {
  const std::size_t required = required_panels(model, j0, j, T, s_end, hbar);
  if (panels == 0) return std::max(required, kMinPanels);
  if (panels < required) {
    std::ostringstream os;
    os << "oscillatory quadrature: " << panels << " panels under-resolve the phase (need >= "
       << required << ")";
    throw ResolutionError(os.str(), required);
  }
  return panels;
}

/// Visits every Gauss node on the composite rule over [0, s_end].
template <typename Visitor>
void for_each_node(double s_end, std::size_t panels, Visitor&& visit) {
  const auto& x = GaussRule::abscissa();
  const auto& w = GaussRule::weights();
  const double h = s_end / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double off = 0.5 * h * x[i];
      const double wt = 0.5 * h * w[i];
      if (x[i] == 0.0) {
        visit(mid, wt);
      } else {
        visit(mid - off, wt);
        visit(mid + off, wt);
      }
    }
  }
}

/// int_0^s_end exp(i T dalpha / hbar) f(s) ds.
template <typename Amplitude>
Complex oscillatory_integral(const ContinuumModel& model, std::size_t j0, std::size_t j, double T,
                             double s_end, std::size_t panels, double hbar, Amplitude&& f) {
  Complex sum{};
  for_each_node(s_end, panels, [&](double s, double weight) {
    const double phase = T * phase_difference(model, j0, j, s) / hbar;
    sum += weight * std::exp(kI * phase) * f(s);
  });
  return sum;
}

}  // namespace

Complex coupling(const ContinuumModel& model, std::size_t j0, std::size_t j, double s) {
  check_pair(model, j0, j);
  return model.coupling(j0, j, s);
}

std::size_t required_panels(const ContinuumModel& model, std::size_t j0, std::size_t j, double T,
                            double s_end, double hbar) {
  check_pair(model, j0, j);
  const double end = checked_s(s_end);
  const double periods = T * max_separation(model, j0, j, end) * end / (2.0 * std::numbers::pi * hbar);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(kPanelsPerPeriod * periods)));
}

Complex transition_amplitude(const ContinuumModel& model, const GeneratorVariant& variant,
                             std::size_t j0, std::size_t j, double T, double s_end,
                             std::size_t panels, double hbar) {
  check_pair(model, j0, j);
  variant.validate(model.size());
  const double end = checked_s(s_end);
  const std::size_t n = resolve_panels(model, j0, j, T, end, panels, hbar);
  if (!variant.couples(j0, j) || end == 0.0) return {};
  return oscillatory_integral(model, j0, j, T, end, n, hbar, [&](double s) {
    return kI * hbar * frame_coupling(model, j0, j, s, false).value;
  });
}

ByPartsAmplitude transition_amplitude_by_parts(const ContinuumModel& model,
                                               const GeneratorVariant& variant, std::size_t j0,
                                               std::size_t j, double T, double s_end,
                                               std::size_t panels, double hbar) {
  check_pair(model, j0, j);
  variant.validate(model.size());
  if (!(T > 0.0)) throw InvalidArgument("integration by parts needs T > 0");
  const double end = checked_s(s_end);
  const std::size_t n = resolve_panels(model, j0, j, T, end, panels, hbar);
  ByPartsAmplitude out;
  if (!variant.couples(j0, j) || end == 0.0) return out;

  auto gap_at = [&](double s) {
    const double gap = level_gap(model, j0, j, s);
    if (std::abs(gap) <= kCrossingTolerance) {
      std::ostringstream os;
      os << "levels " << j0 << " and " << j << " cross near s=" << s;
      throw CrossingError(os.str(), s);
    }
    return gap;
  };
  // K / dE at s together with its s-derivative.
  auto ratio = [&](double s) {
    const FrameCoupling c = frame_coupling(model, j0, j, s, true);
    const double gap = gap_at(s);
    const double gap_rate = model.eigenvalue_rate(j0, s) - model.eigenvalue_rate(j, s);
    const Complex k = kI * hbar * c.value;
    const Complex k_rate = kI * hbar * c.rate;
    return std::pair<Complex, Complex>{k / gap, k_rate / gap - k * gap_rate / (gap * gap)};
  };

  const Complex prefactor = hbar / (kI * T);
  const auto [r_end, dr_end] = ratio(end);
  const auto [r_start, dr_start] = ratio(0.0);
  const Complex e_end = std::exp(kI * T * phase_difference(model, j0, j, end) / hbar);
  out.boundary = prefactor * (e_end * r_end - r_start);

  double max_ratio = std::max(std::abs(r_end), std::abs(r_start));
  double variation = 0.0;
  Complex sum{};
  for_each_node(end, n, [&](double s, double weight) {
    const auto [r, dr] = ratio(s);
    const double phase = T * phase_difference(model, j0, j, s) / hbar;
    sum += weight * std::exp(kI * phase) * dr;
    max_ratio = std::max(max_ratio, std::abs(r));
    variation += weight * std::abs(dr);
  });
  out.remainder_integral = sum;
  out.total = out.boundary - prefactor * out.remainder_integral;
  out.bound = hbar / T * (2.0 * max_ratio + variation);
  return out;
}

double leakage_exact(const ContinuumModel& model, const Matrix& u_end, const BandPartition& bands,
                     std::size_t j0) {
  if (j0 >= model.size()) throw InvalidArgument("initial state index out of range");
  const Vector psi = u_end * model.frame_vector(j0, 0.0);
  const Vector c = model.frame(1.0).adjoint() * psi;
  const IndexRange r = bands.band(bands.band_of(j0));
  double eta = 0.0;
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (!r.contains(j)) eta += std::norm(c(static_cast<Eigen::Index>(j)));
  }
  return eta;
}

double leakage_exact(const ContinuumModel& model, const UnitaryFamily& u,
                     const BandPartition& bands, std::size_t j0) {
  return leakage_exact(model, u.back(), bands, j0);
}

double leakage_wave_form(const ContinuumModel& model, const Matrix& w_end,
                         const BandPartition& bands, std::size_t j0) {
  if (j0 >= model.size()) throw InvalidArgument("initial state index out of range");
  const Matrix r0 = model.frame(0.0);
  const Vector psi = w_end * r0.col(static_cast<Eigen::Index>(j0));
  const Vector c = r0.adjoint() * psi;
  const IndexRange r = bands.band(bands.band_of(j0));
  double eta = 0.0;
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (!r.contains(j)) eta += std::norm(c(static_cast<Eigen::Index>(j)));
  }
  return eta;
}

double leakage_first_order(const ContinuumModel& model, const BandPartition& bands,
                           std::size_t j0, double T, double hbar) {
  if (j0 >= model.size()) throw InvalidArgument("initial state index out of range");
  // A single band has no exterior and therefore nothing to leak into.
  if (bands.count() == 1) return 0.0;
  const auto variant = GeneratorVariant::weyl_band(bands);
  double eta = 0.0;
  for (std::size_t j : exterior_of(bands, j0)) {
    eta += std::norm(transition_amplitude(model, variant, j0, j, T, 1.0, 0, hbar)) / (hbar * hbar);
  }
  return eta;
}

double transition_weight(const ContinuumModel& model, const BandPartition& bands, std::size_t j0,
                         std::size_t j, double T, double hbar) {
  check_pair(model, j0, j);
  if (bands.same_band(j0, j)) throw InvalidArgument("transition weight needs j outside band(j0)");
  if (!(T > 0.0)) throw InvalidArgument("transition weight needs T > 0");
  const std::size_t n = resolve_panels(model, j0, j, T, 1.0, 0, hbar);
  // Physical time t = t0 + s T: dt = T ds and d/dt phi = (d/ds phi) / T.
  const Complex integral = oscillatory_integral(model, j0, j, T, 1.0, n, hbar, [&](double s) {
    const Complex time_coupling = frame_coupling(model, j0, j, s, false).value / T;
    return time_coupling * T;
  });
  return std::norm(kI * hbar * integral);
}

MaxEstimate transition_weight_max_estimate(const ContinuumModel& model, const BandPartition& bands,
                                           std::size_t j0, std::size_t j, double T,
                                           std::size_t s_samples, double hbar) {
  check_pair(model, j0, j);
  if (bands.same_band(j0, j)) throw InvalidArgument("max estimate needs j outside band(j0)");
  if (!(T > 0.0)) throw InvalidArgument("max estimate needs T > 0");
  MaxEstimate best;
  for (double s : uniform_samples(s_samples)) {
    const double gap = level_gap(model, j0, j, s);
    if (std::abs(gap) <= kCrossingTolerance) {
      std::ostringstream os;
      os << "levels " << j0 << " and " << j << " cross at s=" << s;
      throw CrossingError(os.str(), s);
    }
    const double value = std::norm(hbar * (model.coupling(j0, j, s) / T) / gap);
    if (value > best.value) best = {value, s};
  }
  return best;
}

CriterionReport criterion(const ContinuumModel& model, const BandPartition& bands, std::size_t j0,
                          double T, std::size_t s_samples, double threshold) {
  if (j0 >= model.size()) throw InvalidArgument("initial state index out of range");
  if (!(T > 0.0)) throw InvalidArgument("criterion needs T > 0");
  if (!(threshold > 0.0)) throw InvalidArgument("criterion threshold must be positive");
  const auto exterior = exterior_of(bands, j0);
  CriterionReport rep;
  rep.T = T;
  rep.threshold = threshold;
  rep.min_gap = std::numeric_limits<double>::infinity();
  const auto row = static_cast<Eigen::Index>(j0);
  for (double s : uniform_samples(s_samples)) {
    const Matrix c = model.couplings(s);
    const RealVector e = model.eigenvalues(s);
    for (std::size_t j : exterior) {
      const auto col = static_cast<Eigen::Index>(j);
      const double coupling_t = std::abs(c(row, col)) / T;
      if (coupling_t > rep.max_coupling) {
        rep.max_coupling = coupling_t;
        rep.s_at_max_coupling = s;
      }
      const double gap = std::abs(e(row) - e(col));
      if (gap < rep.min_gap) {
        rep.min_gap = gap;
        rep.s_at_min_gap = s;
      }
    }
  }
  if (!(rep.min_gap > kCrossingTolerance)) {
    throw CrossingError("criterion: exterior level meets the initial level", rep.s_at_min_gap);
  }
  rep.margin = rep.max_coupling / rep.min_gap;
  rep.satisfied = rep.margin <= threshold;
  return rep;
}

LeakageReport leakage_report(const ContinuumModel& model, const BandPartition& bands,
                             std::size_t j0, double T, const Matrix& u_end, const Matrix& a_end,
                             double hbar) {
  LeakageReport rep;
  rep.T = T;
  rep.j0 = j0;
  rep.band = bands.band_of(j0);
  rep.eta_exact = leakage_exact(model, u_end, bands, j0);
  rep.eta_first_order = leakage_first_order(model, bands, j0, T, hbar);
  const Matrix w = phase_operator(model, T, 1.0, hbar).adjoint() * a_end.adjoint() * u_end;
  rep.w_deviation = spectral_norm(w - Matrix::Identity(w.rows(), w.cols()));
  return rep;
}

ConvergenceFit fit_power_law(const std::vector<double>& T, const std::vector<double>& eta) {
  if (T.size() != eta.size()) throw InvalidArgument("fit: T and eta lengths differ");
  if (T.size() < 3) throw InvalidArgument("fit: need at least 3 points");
  const auto n = static_cast<double>(T.size());
  double sx = 0, sy = 0;
  std::vector<double> x(T.size()), y(T.size());
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(T[i] > 0.0) || !(eta[i] > 0.0)) throw InvalidArgument("fit: T and eta must be positive");
    x[i] = std::log(T[i]);
    y[i] = std::log(eta[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit: T values must not all coincide");
  ConvergenceFit fit;
  fit.T = T;
  fit.eta = eta;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::ok: return "ok";
    case FitStatus::trivially_adiabatic: return "trivially_adiabatic";
  }
  return "unknown";
}

ConvergenceStudy convergence_study(const ContinuumModel& model, const BandPartition& bands,
                                   std::size_t j0, std::vector<double> T_list,
                                   const StudyOptions& options) {
  if (T_list.size() < 3) throw InvalidArgument("convergence study needs at least 3 T values");
  for (double T : T_list) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("convergence study needs T > 0");
  }
  if (j0 >= model.size()) throw InvalidArgument("initial state index out of range");
  std::sort(T_list.begin(), T_list.end());
  const double hbar = options.base.hbar;

  const UnitaryFamily a =
      intertwiner(model, options.variant, options.base.steps, options.base.scheme, hbar);
  const double gap = virtual_gap(model, bands, bands.band_of(j0), options.gap_samples);

  ConvergenceStudy study;
  study.intertwining_residual = intertwining_residual(a, model, bands);
  study.runs.resize(T_list.size());
  study.steps.resize(T_list.size());
  study.gap_margin_ok.resize(T_list.size());
  std::vector<std::exception_ptr> failures(T_list.size());

  for (std::size_t i = 0; i < T_list.size(); ++i) {
    study.steps[i] = std::max(options.base.steps,
                              minimal_steps(T_list[i] * model.max_hamiltonian_norm() / hbar));
    study.gap_margin_ok[i] = gap * T_list[i] >= options.gap_margin;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < T_list.size(); i = next.fetch_add(1)) {
      try {
        PropagationConfig cfg = options.base;
        cfg.T = T_list[i];
        cfg.steps = study.steps[i];
        const Matrix u_end = propagate_endpoint(model, cfg);
        study.runs[i] = leakage_report(model, bands, j0, cfg.T, u_end, a.back(), hbar);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, T_list.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::vector<double> fit_T, fit_eta;
  for (const auto& run : study.runs) {
    if (run.eta_exact == 0.0) {
      study.excluded_T.push_back(run.T);
    } else {
      fit_T.push_back(run.T);
      fit_eta.push_back(run.eta_exact);
    }
  }
  if (fit_T.empty()) {
    study.status = FitStatus::trivially_adiabatic;
    return study;
  }
  if (fit_T.size() < 3) {
    throw InvalidArgument("convergence study: fewer than 3 runs with nonzero leakage to fit");
  }
  study.fit = fit_power_law(fit_T, fit_eta);
  return study;
}

}  // namespace adiabatic
