#include "adiabatic/harness/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "adiabatic/weyl_bands.hpp"

namespace adiabatic::harness {

namespace {

/// Shortest round-trip form for the console summary.
std::string fmt(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc{} ? std::string(buf, ptr) : format_double(x);
}

double single_T(const ExperimentConfig& config, const std::string& command) {
  if (!config.run.T) throw ConfigError("[run] T: " + command + " needs a single T");
  return *config.run.T;
}

/// T used by verify: the single T when given, else the smallest sweep point.
double verify_T(const ExperimentConfig& config) {
  if (config.run.T) return *config.run.T;
  return *std::min_element(config.run.T_list.begin(), config.run.T_list.end());
}

std::vector<std::size_t> exterior_of(const BandPartition& bands, std::size_t j0) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < bands.grid_size(); ++j) {
    if (!bands.same_band(j0, j)) out.push_back(j);
  }
  return out;
}

double max_over(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, x);
  return m;
}

}  // namespace

Outcome simulate(const ExperimentConfig& config) {
  const double T = single_T(config, "simulate");
  const ContinuumModel model = make_model(config);
  const BandPartition bands = make_partition(config);
  const GeneratorVariant variant = make_variant(config);
  const std::size_t j0 = config.analysis.j0;
  if (exterior_of(bands, j0).empty()) {
    throw NoExteriorError("band of j0 covers the whole grid (m = N)");
  }

  const PropagationConfig prop = make_propagation(config, T);
  const UnitaryFamily u = propagate(model, prop);
  const UnitaryFamily a = intertwiner(model, variant, prop.steps, prop.scheme, prop.hbar);
  const UnitaryFamily phi = phase_family(model, T, u.nodes, prop.hbar);
  const UnitaryFamily w = wave_family(u, a, phi);

  const LeakageReport leak = leakage_report(model, bands, j0, T, u.back(), a.back(), prop.hbar);

  Outcome out;
  out.report = report_header("simulate", config);
  out.report["leakage"] = to_json(leak);
  if (T > 0.0) {
    out.report["criterion"] = to_json(
        criterion(model, bands, j0, T, config.analysis.s_samples, config.analysis.threshold));
  } else {
    out.report["criterion"] = nullptr;
  }

  ordered_json panels = ordered_json::object();
  for (std::size_t j : exterior_of(bands, j0)) {
    panels[std::to_string(j)] = required_panels(model, j0, j, T, 1.0, prop.hbar);
  }
  ordered_json diag;
  diag["steps"] = {{"U", prop.steps}, {"A", prop.steps}};
  diag["scheme"] = to_string(prop.scheme);
  diag["quadrature_panels"] = std::move(panels);
  diag["unitarity"] = {{"U", u.max_unitarity_defect()},
                       {"A", a.max_unitarity_defect()},
                       {"Phi", phi.max_unitarity_defect()},
                       {"W", w.max_unitarity_defect()}};
  diag["intertwining_residual"] = intertwining_residual(a, model, bands);
  diag["eta_wave_form"] = leakage_wave_form(model, w.back(), bands, j0);
  out.report["diagnostics"] = std::move(diag);

  out.lines.push_back("T=" + fmt(T) + " j0=" + std::to_string(j0) + " band=" +
                      std::to_string(leak.band));
  out.lines.push_back("eta_exact=" + fmt(leak.eta_exact));
  out.lines.push_back("eta_first_order=" + fmt(leak.eta_first_order));
  out.lines.push_back("w_deviation=" + fmt(leak.w_deviation));
  return out;
}

Outcome sweep(const ExperimentConfig& config, std::size_t jobs) {
  if (config.run.T_list.size() < 3) {
    throw ConfigError("[run] T_list: sweep needs at least 3 entries, got " +
                      std::to_string(config.run.T_list.size()));
  }
  const ContinuumModel model = make_model(config);
  const BandPartition bands = make_partition(config);

  StudyOptions opts;
  opts.base = make_propagation(config, 0.0);
  opts.variant = make_variant(config);
  opts.jobs = std::max<std::size_t>(jobs, 1);
  opts.gap_margin = config.analysis.margin;
  opts.gap_samples = config.analysis.s_samples;

  const ConvergenceStudy study =
      convergence_study(model, bands, config.analysis.j0, config.run.T_list, opts);

  Outcome out;
  out.report = report_header("sweep", config);
  out.report["study"] = to_json(study);
  out.csv = sweep_csv(study);
  out.lines.push_back("status=" + to_string(study.status));
  if (study.fit) {
    out.lines.push_back("slope=" + fmt(study.fit->slope) + " r_squared=" + fmt(study.fit->r_squared));
  }
  const auto below = std::count(study.gap_margin_ok.begin(), study.gap_margin_ok.end(), false);
  if (below > 0) {
    out.lines.push_back("note: " + std::to_string(below) + " of " + std::to_string(study.runs.size()) +
                        " T values fall below the gap margin");
  }
  return out;
}

Outcome check_criterion(const ExperimentConfig& config) {
  const double T = single_T(config, "criterion");
  const ContinuumModel model = make_model(config);
  const BandPartition bands = make_partition(config);
  const CriterionReport rep = criterion(model, bands, config.analysis.j0, T,
                                        config.analysis.s_samples, config.analysis.threshold);
  Outcome out;
  out.report = report_header("criterion", config);
  out.report["criterion"] = to_json(rep);
  out.exit_code = rep.satisfied ? exit_code::ok : exit_code::criterion_unsatisfied;
  out.lines.push_back("margin=" + fmt(rep.margin) + " threshold=" + fmt(rep.threshold) + " " +
                      (rep.satisfied ? "satisfied" : "NOT satisfied"));
  return out;
}

Outcome plan_bands(const ExperimentConfig& config, double target_T) {
  if (!(target_T > 0.0) || !std::isfinite(target_T)) {
    throw ConfigError("bands: target T must be > 0");
  }
  const ContinuumModel model = make_model(config);
  const double margin = config.analysis.margin;
  // Grid nodes carry roundoff, so gap * T is compared with a relative slack.
  constexpr double kRelativeSlack = 1e-9;

  ordered_json table = ordered_json::array();
  std::optional<std::size_t> chosen;
  double best = 0.0;
  for (std::size_t m = 1; m <= model.size(); ++m) {
    const BandPartition bands(model.size(), m);
    ordered_json row;
    row["m"] = m;
    if (bands.count() < 2) {
      row["gap"] = nullptr;
      row["gap_times_T"] = nullptr;
      row["feasible"] = false;
      table.push_back(std::move(row));
      continue;
    }
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bands.count(); ++b) {
      gap = std::min(gap, virtual_gap(model, bands, b, config.analysis.s_samples));
    }
    const double achieved = gap * target_T;
    const bool feasible = achieved >= margin * (1.0 - kRelativeSlack);
    best = std::max(best, achieved);
    if (feasible && !chosen) chosen = m;
    row["gap"] = gap;
    row["gap_times_T"] = achieved;
    row["feasible"] = feasible;
    table.push_back(std::move(row));
  }

  Outcome out;
  out.report = report_header("bands", config);
  out.report["target_T"] = target_T;
  out.report["margin"] = margin;
  out.report["m"] = chosen ? ordered_json(*chosen) : ordered_json(nullptr);
  out.report["best_margin"] = best;
  out.report["table"] = std::move(table);
  if (chosen) {
    out.lines.push_back("m=" + std::to_string(*chosen) + " target_T=" + fmt(target_T));
  } else {
    out.exit_code = exit_code::no_feasible_band;
    out.lines.push_back("no band size reaches gap*T >= " + fmt(margin) +
                        "; best achievable " + fmt(best));
  }
  return out;
}

std::vector<CheckResult> invariant_checks(const ExperimentConfig& config) {
  const ContinuumModel model = make_model(config);
  const BandPartition bands = make_partition(config);
  const std::size_t j0 = config.analysis.j0;
  const double T = verify_T(config);
  const PropagationConfig prop = make_propagation(config, T);
  const bool frozen = config.rotation.theta_max == 0.0;
  const std::string trivial = frozen ? "trivial: constant frame" : "";
  const std::vector<double> probe{0.0, 0.5, 1.0};
  const std::vector<double> scan = uniform_samples(config.analysis.s_samples);
  std::vector<CheckResult> checks;

  auto add = [&](std::string name, double measured, double tol, std::string note = "") {
    checks.push_back({std::move(name), measured <= tol, measured, tol, std::move(note)});
  };

  {
    double idem = 0.0, herm = 0.0, trace = 0.0, complete = 0.0;
    for (double s : probe) {
      Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(model.size()),
                                static_cast<Eigen::Index>(model.size()));
      for (std::size_t b = 0; b < bands.count(); ++b) {
        const Matrix p = band_projector(model, bands, b, s).matrix;
        idem = std::max(idem, max_abs(p * p - p));
        herm = std::max(herm, max_abs(p - p.adjoint()));
        trace = std::max(trace, std::abs(p.trace() - static_cast<double>(bands.band(b).size())));
        sum += p;
      }
      complete = std::max(complete, max_abs(sum - Matrix::Identity(sum.rows(), sum.cols())));
    }
    add("projector_idempotent", idem, 1e-12);
    add("projector_hermitian", herm, 1e-13);
    add("projector_trace", trace, 1e-10);
    add("projector_completeness", complete, 1e-12);
  }

  {
    const NoncrossingReport nc = validate_noncrossing(model, bands, config.analysis.s_samples);
    checks.push_back({"noncrossing", nc.ok, nc.min_separation, kCrossingTolerance,
                      bands.count() < 2 ? "single band" : "measured is the minimum separation"});
  }

  {
    std::vector<double> defects;
    std::string note;
    try {
      const UnitaryFamily u = propagate(model, prop);
      const UnitaryFamily a = intertwiner(model, make_variant(config), prop.steps, prop.scheme);
      const UnitaryFamily phi = phase_family(model, T, u.nodes);
      const UnitaryFamily w = wave_family(u, a, phi);
      defects = {u.max_unitarity_defect(), a.max_unitarity_defect(),
                 phi.max_unitarity_defect(), w.max_unitarity_defect()};
    } catch (const ResolutionError& e) {
      note = e.what();
    }
    if (note.empty()) {
      add("unitarity", max_over(defects), 1e-9);
    } else {
      checks.push_back({"unitarity", false, std::numeric_limits<double>::infinity(), 1e-9, note});
    }
  }

  {
    const ContinuumModel still = model.with_theta_max(0.0);
    double eta = 0.0, k = 0.0, a_dev = 0.0, u_dev = 0.0;
    std::string note;
    for (double t : {0.0, T}) {
      PropagationConfig p = prop;
      p.T = t;
      try {
        const UnitaryFamily u = propagate(still, p);
        const UnitaryFamily phi = phase_family(still, t, u.nodes);
        for (std::size_t i = 0; i < u.size(); ++i) u_dev = std::max(u_dev, max_abs(u.at(i) - phi.at(i)));
        if (bands.count() > 1) eta = std::max(eta, leakage_exact(still, u, bands, j0));
      } catch (const ResolutionError& e) {
        note = e.what();
        u_dev = std::numeric_limits<double>::infinity();
      }
    }
    for (double s : scan) {
      k = std::max(k, max_abs(intertwining_generator(still, GeneratorVariant::kato_state(), s)));
    }
    const UnitaryFamily a = intertwiner(still, GeneratorVariant::kato_state(), prop.steps, prop.scheme);
    for (const Matrix& m : a.values) {
      a_dev = std::max(a_dev, max_abs(m - Matrix::Identity(m.rows(), m.cols())));
    }
    add("frozen_frame_leakage", eta, 1e-12);
    add("frozen_frame_generator", k, 0.0);
    add("frozen_frame_intertwiner", a_dev, 0.0);
    add("frozen_frame_phase", u_dev, 1e-10, note);
  }

  {
    const GeneratorVariant single = GeneratorVariant::weyl_band(BandPartition(model.size(), 1));
    double dev = 0.0;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      dev = std::max(dev, max_abs(intertwining_generator(model, single, s) -
                                  intertwining_generator(model, GeneratorVariant::kato_state(), s)));
    }
    add("variant_degeneracy", dev, 1e-14, trivial);
  }

  const GeneratorVariant weyl = GeneratorVariant::weyl_band(bands);
  {
    double worst = 0.0;
    for (double s : scan) {
      const Matrix k = generator_frame_elements(model, weyl, s);
      for (std::size_t a = 0; a < model.size(); ++a) {
        for (std::size_t b = 0; b < model.size(); ++b) {
          if (bands.same_band(a, b)) {
            worst = std::max(worst, std::abs(k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
          }
        }
      }
    }
    add("supplementary_condition", worst, 1e-15, trivial);
  }

  {
    double in_band = 0.0;
    for (std::size_t j : {bands.band(bands.band_of(j0)).begin, bands.band(bands.band_of(j0)).end - 1}) {
      in_band = std::max(in_band, std::abs(transition_amplitude(model, weyl, j0, j, T, 1.0)));
    }
    add("in_band_amplitude_zero", in_band, 0.0);

    const auto exterior = exterior_of(bands, j0);
    if (!(T > 0.0)) {
      checks.push_back({"by_parts", true, 0.0, 1e-8, "skipped: T = 0"});
    } else if (exterior.empty()) {
      checks.push_back({"by_parts", true, 0.0, 1e-8, "skipped: no exterior"});
    } else {
      double worst = 0.0;
      for (std::size_t j : exterior) {
        const Complex direct = transition_amplitude(model, weyl, j0, j, T, 1.0);
        const ByPartsAmplitude bp = transition_amplitude_by_parts(model, weyl, j0, j, T, 1.0);
        worst = std::max(worst, std::abs(direct - bp.total));
      }
      add("by_parts", worst, 1e-8, trivial);
    }
  }

  {
    const UnitaryFamily a = intertwiner(model, GeneratorVariant::kato_state(), prop.steps, prop.scheme);
    add("intertwining", intertwining_residual(a, model, bands), 1e-6, trivial);
  }
  return checks;
}

Outcome verify(const ExperimentConfig& config) {
  const std::vector<CheckResult> checks = invariant_checks(config);
  const ContinuumModel model = make_model(config);
  const BandPartition bands = make_partition(config);

  Outcome out;
  out.report = report_header("verify", config);
  ordered_json list = ordered_json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"measured", c.measured},
                    {"tolerance", c.tolerance},
                    {"note", c.note}});
    std::string line = std::string(c.passed ? "PASS " : "FAIL ") + c.name + " measured=" +
                       fmt(c.measured) + " tolerance=" + fmt(c.tolerance);
    if (!c.note.empty()) line += " (" + c.note + ")";
    out.lines.push_back(std::move(line));
  }
  out.report["checks"] = std::move(list);

  // Reported for comparison only; neither has a pass/fail threshold.
  const UnitaryFamily a_weyl =
      intertwiner(model, GeneratorVariant::weyl_band(bands), config.run.steps, config.run.scheme);
  double non_hermitian = 0.0;
  for (double s : uniform_samples(config.analysis.s_samples)) {
    non_hermitian = std::max(non_hermitian, hermiticity_defect(sliding_window_generator(model, config.bands.m, s)));
  }
  out.report["diagnostics"] = {{"weyl_band_intertwining_residual", intertwining_residual(a_weyl, model, bands)},
                               {"sliding_window_non_hermiticity", non_hermitian}};
  out.report["passed"] = all;
  out.exit_code = all ? exit_code::ok : exit_code::invariant;
  return out;
}

int run_command(const std::string& command, const CommandOptions& options, std::ostream& out,
                std::ostream& err) {
  try {
    ExperimentConfig config = load_config(options.config);
    if (options.steps) config.run.steps = *options.steps;
    if (options.threshold) config.analysis.threshold = *options.threshold;
    validate(config);

    Outcome result;
    if (command == "simulate") {
      result = simulate(config);
    } else if (command == "sweep") {
      result = sweep(config, options.jobs);
    } else if (command == "criterion") {
      result = check_criterion(config);
    } else if (command == "bands") {
      result = plan_bands(config, options.target_T ? *options.target_T : single_T(config, "bands"));
    } else if (command == "verify") {
      result = verify(config);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }

    // --out is a placement choice, not part of the experiment, so it stays
    // out of the resolved config and its hash.
    const std::filesystem::path dir = options.out ? *options.out : std::filesystem::path(config.output.directory);
    std::filesystem::create_directories(dir);
    const auto& formats = config.output.formats;
    const bool json = std::find(formats.begin(), formats.end(), "json") != formats.end();
    const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
    write_text(dir / "resolved_config.json", to_json(config).dump(2) + "\n");
    if (json) write_text(dir / "report.json", result.report.dump(2) + "\n");
    if (csv && result.csv) write_text(dir / "sweep.csv", *result.csv);

    for (const auto& line : result.lines) out << line << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const CrossingError& e) {
    err << "crossing: " << e.what() << '\n';
    return exit_code::crossing;
  } catch (const NoExteriorError& e) {
    err << "no exterior: " << e.what() << '\n';
    return exit_code::no_exterior;
  } catch (const ResolutionError& e) {
    err << "resolution: " << e.what() << " (required " << e.required() << ")\n";
    return exit_code::resolution;
  } catch (const NumericalError& e) {
    err << "numerical: " << e.what() << '\n';
    return exit_code::numerical;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_code::config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::invariant;
  }
}

}  // namespace adiabatic::harness
