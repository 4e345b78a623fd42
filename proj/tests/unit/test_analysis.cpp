#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "adiabatic/analysis.hpp"
#include "adiabatic/errors.hpp"
#include "adiabatic/propagation.hpp"
#include "adiabatic/weyl_bands.hpp"

using namespace adiabatic;

namespace {

const Complex kImag(0.0, 1.0);

// Default grid: k_j = 1 + j / 15, E = k (1 + s), alpha = k (s + s^2 / 2).
double k_of(std::size_t j, std::size_t n = 16) {
  return 1.0 + static_cast<double>(j) / static_cast<double>(n - 1);
}

double cubic_rate(double theta_max, double s) { return 3.0 * theta_max * s * s; }
double cubic_acceleration(double theta_max, double s) { return 6.0 * theta_max * s; }

// exp(i T dalpha) * i * theta'(s) * G_{j0 j}, hbar = 1, nearest-neighbour G.
oracle::Complex amplitude_integrand(std::size_t j0, std::size_t j, double T, double theta_max,
                                    double s) {
  const oracle::Matrix g = oracle::nearest_neighbor_generator(16);
  const double dalpha = (k_of(j0) - k_of(j)) * (s + 0.5 * s * s);
  return std::exp(kImag * T * dalpha) * kImag * cubic_rate(theta_max, s) *
         g(static_cast<Eigen::Index>(j0), static_cast<Eigen::Index>(j));
}

PropagationConfig config(double T, std::size_t steps,
                         Scheme scheme = Scheme::midpoint_exponential) {
  PropagationConfig c;
  c.T = T;
  c.steps = steps;
  c.scheme = scheme;
  return c;
}

Matrix propagate_default(const ContinuumModel& m, double T) {
  const std::size_t steps = std::max<std::size_t>(4000, minimal_steps(T * m.max_hamiltonian_norm()));
  return propagate_endpoint(m, config(T, steps));
}

StudyOptions study_options(std::size_t jobs = 1) {
  StudyOptions o;
  o.base = config(100.0, 4000);
  o.variant = GeneratorVariant::kato_state();
  o.jobs = jobs;
  return o;
}

}  // namespace

TEST_CASE("coupling closed form against the generic inner product") {
  const auto m = oracle::default_model();
  const oracle::Matrix g = oracle::nearest_neighbor_generator(16);
  for (double s : {0.1, 0.45, 0.8, 1.0}) {
    // Central differences of exp(theta G) from an independent exponential.
    const double h = 1e-5;
    auto frame = [&](double x) { return oracle::taylor_exp(0.4 * x * x * x * g); };
    const oracle::Matrix r = frame(s);
    const oracle::Matrix dr = (frame(s + h) - frame(s - h)) / (2.0 * h);
    const oracle::Matrix c = r.adjoint() * dr;
    for (std::size_t a = 0; a < 16; ++a) {
      for (std::size_t b = 0; b < 16; ++b) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        CHECK(std::abs(coupling(m, a, b, s) - c(ia, ib)) <= 1e-9);
        CHECK(std::abs(coupling(m, a, b, s) - cubic_rate(0.4, s) * g(ia, ib)) <= 1e-12);
      }
    }
  }
  const auto frozen = oracle::default_model(0.0);
  CHECK(coupling(frozen, 7, 8, 0.5) == Complex{});
  CHECK(coupling(m, 7, 7, 0.5) == Complex{});
  CHECK_THROWS_AS(coupling(m, 16, 0, 0.5), InvalidArgument);
}

TEST_CASE("transition amplitude: trivial cases") {
  const auto m = oracle::default_model();
  const BandPartition bands(16, 2);
  const auto weyl = GeneratorVariant::weyl_band(bands);
  // In-band pairs vanish identically, not approximately.
  CHECK(transition_amplitude(m, weyl, 6, 7, 200.0, 1.0) == Complex{});
  CHECK(transition_amplitude(m, weyl, 7, 6, 50.0, 0.7) == Complex{});
  CHECK(transition_amplitude(m, weyl, 7, 8, 200.0, 1.0) != Complex{});

  const auto frozen = oracle::default_model(0.0);
  for (const auto& v : {GeneratorVariant::kato_state(), weyl}) {
    CHECK(transition_amplitude(frozen, v, 7, 8, 200.0, 1.0) == Complex{});
    CHECK(transition_amplitude_by_parts(frozen, v, 7, 8, 200.0, 1.0).total == Complex{});
  }
  // (0, 4) has no direct coupling under a nearest-neighbour generator.
  const auto kato = GeneratorVariant::kato_state();
  const Complex f04 = transition_amplitude(m, kato, 0, 4, 200.0, 1.0);
  CHECK(std::abs(f04 - transition_amplitude_by_parts(m, kato, 0, 4, 200.0, 1.0).total) <= 1e-8);
}

TEST_CASE("transition amplitude matches a fine Simpson rule") {
  const auto m = oracle::default_model();
  const auto kato = GeneratorVariant::kato_state();
  for (double T : {50.0, 200.0, 800.0}) {
    for (auto [j0, j] : {std::pair{7, 8}, {8, 7}, {3, 4}, {12, 11}}) {
      for (double s_end : {0.6, 1.0}) {
        const Complex f = transition_amplitude(m, kato, j0, j, T, s_end);
        const Complex ref = oracle::simpson(
            [&](double s) { return amplitude_integrand(j0, j, T, 0.4, s); }, 0.0, s_end, 40000);
        CHECK(std::abs(f - ref) <= 1e-10);
      }
    }
  }
}

TEST_CASE("transition amplitude rejects an under-resolved panel count") {
  const auto m = oracle::default_model();
  const auto kato = GeneratorVariant::kato_state();
  const std::size_t need = required_panels(m, 7, 8, 800.0, 1.0);
  // 20 panels per period of T * max|dE| / (2 pi).
  CHECK(need == static_cast<std::size_t>(std::ceil(20.0 * 800.0 * (2.0 / 15.0) / (2.0 * std::numbers::pi))));
  try {
    transition_amplitude(m, kato, 7, 8, 800.0, 1.0, need - 1);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(e.required() == need);
  }
  CHECK_NOTHROW(transition_amplitude(m, kato, 7, 8, 800.0, 1.0, need));
  CHECK_THROWS_AS(transition_amplitude_by_parts(m, kato, 7, 8, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("by-parts identity on a ten-pair sample") {
  const auto nn = oracle::default_model();
  const auto banded = build_model(KGrid(1.0, 2.0, 16), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                                  FrameRotation::banded(16, 3, AngleSchedule(AngleProfile::cubic, 0.4)));
  const auto kato = GeneratorVariant::kato_state();
  const std::vector<std::pair<std::size_t, std::size_t>> nn_pairs{
      {1, 2}, {2, 1}, {7, 8}, {8, 7}, {13, 14}};
  const std::vector<std::pair<std::size_t, std::size_t>> banded_pairs{
      {0, 3}, {4, 2}, {7, 9}, {10, 13}, {15, 12}};
  for (double T : {100.0, 400.0}) {
    for (const auto& [model, pairs] : {std::pair{&nn, &nn_pairs}, {&banded, &banded_pairs}}) {
      for (auto [j0, j] : *pairs) {
        const Complex f = transition_amplitude(*model, kato, j0, j, T, 1.0);
        const auto bp = transition_amplitude_by_parts(*model, kato, j0, j, T, 1.0);
        CHECK(std::abs(f) > 0.0);
        CHECK(std::abs(f - bp.total) <= std::max(1e-8, 1e-6 * std::abs(f)));
        CHECK(std::abs(bp.boundary - (bp.total + Complex(0.0, -1.0 / T) * bp.remainder_integral)) <= 1e-14);
      }
    }
  }
}

TEST_CASE("by-parts bound from an independent scan") {
  const auto m = oracle::default_model();
  const auto kato = GeneratorVariant::kato_state();
  for (double T : {100.0, 800.0}) {
    const auto bp = transition_amplitude_by_parts(m, kato, 7, 8, T, 1.0);
    // |K / dE| = theta' / (dk (1 + s)) and its derivative.
    const double dk = 1.0 / 15.0;
    auto ratio = [&](double s) { return cubic_rate(0.4, s) / (dk * (1.0 + s)); };
    auto ratio_rate = [&](double s) {
      return std::abs(cubic_acceleration(0.4, s) / (dk * (1.0 + s)) -
                      cubic_rate(0.4, s) / (dk * (1.0 + s) * (1.0 + s)));
    };
    double peak = 0.0;
    for (double s : oracle::linspace(0.0, 1.0, 2001)) peak = std::max(peak, ratio(s));
    const double bound = (2.0 * peak + oracle::romberg(ratio_rate, 0.0, 1.0)) / T;
    CHECK(bp.bound == doctest::Approx(bound).epsilon(1e-6));
    CHECK(std::abs(bp.total) <= bp.bound);
  }
}

TEST_CASE("transition amplitude decays like 1/T") {
  const auto m = oracle::default_model();
  const auto kato = GeneratorVariant::kato_state();
  for (auto [j0, j] : {std::pair{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}}) {
    for (double T : {200.0, 400.0}) {
      const double ratio = std::abs(transition_amplitude(m, kato, j0, j, 2.0 * T, 1.0)) /
                           std::abs(transition_amplitude(m, kato, j0, j, T, 1.0));
      CHECK(ratio >= 0.3);
      CHECK(ratio <= 0.7);
    }
  }
}

TEST_CASE("exact leakage: frozen frame, zero duration and bounds") {
  const BandPartition bands(16, 2);
  const auto frozen = oracle::default_model(0.0);
  CHECK(leakage_exact(frozen, propagate_default(frozen, 100.0), bands, 7) <= 1e-12);

  // T = 0: U = I, leakage is the pure frame mismatch.
  const auto m = oracle::default_model();
  const oracle::Matrix r1 = oracle::taylor_exp(0.4 * oracle::nearest_neighbor_generator(16));
  const oracle::Matrix p = r1.middleCols(6, 2) * r1.middleCols(6, 2).adjoint();
  const oracle::Vector phi = oracle::Matrix::Identity(16, 16).col(7);
  const double expected = 1.0 - (p * phi).squaredNorm();
  CHECK(expected > 1e-3);
  CHECK(leakage_exact(m, Matrix::Identity(16, 16), bands, 7) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(leakage_exact(m, propagate_endpoint(m, config(0.0, 10)), bands, 7) ==
        doctest::Approx(expected).epsilon(1e-12));

  for (double T : {1.0, 10.0, 100.0}) {
    const double eta = leakage_exact(m, propagate_default(m, T), bands, 7);
    CHECK(eta >= 0.0);
    CHECK(eta <= 1.0 + 1e-10);
  }
  CHECK_THROWS_AS(leakage_exact(m, Matrix::Identity(16, 16), bands, 16), InvalidArgument);
}

TEST_CASE("wave-operator form agrees with the projector form") {
  const auto m = oracle::default_model();
  const BandPartition bands(16, 2);
  const double T = 100.0;
  const Matrix u = propagate_default(m, T);
  const UnitaryFamily a =
      intertwiner(m, GeneratorVariant::kato_state(), 4000, Scheme::fourth_order_commutator_free);
  const Matrix w = phase_operator(m, T, 1.0).adjoint() * a.back().adjoint() * u;
  const double eta = leakage_exact(m, u, bands, 7);
  CHECK(eta > 1e-3);
  CHECK(std::abs(leakage_wave_form(m, w, bands, 7) - eta) <= 1e-10);
}

TEST_CASE("first-order leakage") {
  const BandPartition bands(16, 2);
  CHECK(leakage_first_order(oracle::default_model(0.0), bands, 7, 800.0) == 0.0);
  const auto m = oracle::default_model();
  CHECK(leakage_first_order(m, BandPartition(16, 16), 7, 800.0) == 0.0);

  const double exact = leakage_exact(m, propagate_default(m, 800.0), bands, 7);
  const double approx = leakage_first_order(m, bands, 7, 800.0);
  CHECK(approx > 0.0);
  CHECK(std::abs(approx - exact) / exact <= 0.3);

  // With a nearest-neighbour generator only state 8 couples to band {6, 7} from j0 = 7.
  const Complex f = transition_amplitude(m, GeneratorVariant::weyl_band(bands), 7, 8, 800.0, 1.0);
  CHECK(approx == doctest::Approx(std::norm(f)).epsilon(1e-14));
}

TEST_CASE("transition weights") {
  const auto m = oracle::default_model();
  const BandPartition bands(16, 2);
  CHECK(transition_weight(oracle::default_model(0.0), bands, 7, 8, 800.0) == 0.0);
  CHECK_THROWS_AS(transition_weight(m, bands, 7, 6, 800.0), InvalidArgument);
  CHECK_THROWS_AS(transition_weight(m, bands, 7, 8, 0.0), InvalidArgument);

  const auto banded = build_model(KGrid(1.0, 2.0, 16), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                                  FrameRotation::banded(16, 3, AngleSchedule(AngleProfile::cubic, 0.4)));
  for (const auto* model : {&m, &banded}) {
    for (double T : {100.0, 800.0}) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 16; ++j) {
        if (!bands.same_band(7, j)) sum += transition_weight(*model, bands, 7, j, T);
      }
      const double first = leakage_first_order(*model, bands, 7, T);
      CHECK(sum == doctest::Approx(first).epsilon(1e-12));
    }
  }

  const double weight = transition_weight(m, bands, 7, 8, 800.0);
  const auto est = transition_weight_max_estimate(m, bands, 7, 8, 800.0, 1001);
  CHECK(weight > 0.0);
  CHECK(weight <= 4.0 * est.value);
}

TEST_CASE("max estimate location and dense scan") {
  const BandPartition bands(16, 2);
  CHECK(transition_weight_max_estimate(oracle::default_model(0.0), bands, 7, 8, 100.0, 101).value == 0.0);

  // Smoothstep with a constant gap peaks where theta' does.
  const auto flat = oracle::default_model(0.4, AngleProfile::smoothstep, 16, 0.0);
  const auto at_half = transition_weight_max_estimate(flat, bands, 7, 8, 100.0, 101);
  CHECK(at_half.s_at_max == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(at_half.value == doctest::Approx(std::pow(1.5 * 0.4 / 100.0 * 15.0, 2)).epsilon(1e-12));

  for (auto profile : {AngleProfile::cubic, AngleProfile::smoothstep, AngleProfile::linear}) {
    const auto m = oracle::default_model(0.4, profile);
    const double T = 200.0;
    double scan = 0.0;
    for (double s : oracle::linspace(0.0, 1.0, 1000)) {
      double rate = 0.0;
      switch (profile) {
        case AngleProfile::cubic: rate = cubic_rate(0.4, s); break;
        case AngleProfile::smoothstep: rate = 0.4 * 6.0 * s * (1.0 - s); break;
        case AngleProfile::linear: rate = 0.4; break;
      }
      scan = std::max(scan, std::pow(rate / T / ((k_of(7) - k_of(8)) * (1.0 + s)), 2));
    }
    const auto est = transition_weight_max_estimate(m, bands, 7, 8, T, 101);
    CHECK(std::abs(est.value - scan) / scan <= 1e-3);
  }

  CHECK_THROWS_AS(transition_weight_max_estimate(oracle::default_model(), bands, 7, 6, 100.0, 101),
                  InvalidArgument);
}

TEST_CASE("criterion") {
  const BandPartition bands(16, 2);
  const double dk = 1.0 / 15.0;
  const auto frozen = criterion(oracle::default_model(0.0), bands, 7, 100.0, 101, 0.1);
  CHECK(frozen.margin == 0.0);
  CHECK(frozen.satisfied);

  // Peak coupling theta'(1) = 3 theta_max for the cubic ramp, 1.5 theta_max at s = 1/2
  // for smoothstep; the smallest exterior gap is dk at s = 0.
  for (double T : {100.0, 1500.0}) {
    const auto cubic = criterion(oracle::default_model(), bands, 7, T, 101, 0.1);
    CHECK(cubic.margin == doctest::Approx(3.0 * 0.4 / (T * dk)).epsilon(1e-12));
    CHECK(cubic.s_at_max_coupling == 1.0);
    CHECK(cubic.min_gap == doctest::Approx(dk).epsilon(1e-12));
    CHECK(cubic.s_at_min_gap == 0.0);
    const auto smooth = criterion(oracle::default_model(0.4, AngleProfile::smoothstep), bands, 7, T, 101, 0.1);
    CHECK(smooth.margin == doctest::Approx(1.5 * 0.4 / (T * dk)).epsilon(1e-12));
    CHECK(smooth.s_at_max_coupling == doctest::Approx(0.5));
  }
  CHECK_FALSE(criterion(oracle::default_model(), bands, 7, 100.0, 101, 0.1).satisfied);
  CHECK(criterion(oracle::default_model(), bands, 7, 1000.0, 101, 0.1).satisfied);

  const auto base = oracle::default_model();
  const auto full = criterion(base, bands, 7, 400.0, 101, 0.1);
  const auto tenth = criterion(base.with_theta_max(0.04), bands, 7, 400.0, 101, 0.1);
  CHECK(std::abs(tenth.margin / full.margin - 0.1) <= 1e-12);

  CHECK_THROWS_AS(criterion(base, BandPartition(16, 16), 7, 100.0, 101, 0.1), NoExteriorError);
  CHECK_THROWS_AS(criterion(base, bands, 7, 0.0, 101, 0.1), InvalidArgument);
}

TEST_CASE("power-law fit") {
  const std::vector<double> T{50, 100, 200, 400};
  std::vector<double> eta;
  for (double t : T) eta.push_back(3.0 * std::pow(t, -2.0));
  const auto fit = fit_power_law(T, eta);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_power_law({1, 2}, {1, 2}), InvalidArgument);
  CHECK_THROWS_AS(fit_power_law({1, 2, 3}, {1, 2}), InvalidArgument);
  CHECK_THROWS_AS(fit_power_law({1, 2, 3}, {1, 0, 2}), InvalidArgument);
}

TEST_CASE("convergence study on the default model") {
  const auto m = oracle::default_model();
  const BandPartition bands(16, 2);
  const std::vector<double> base_T{800, 50, 200, 100, 400};
  const auto study = convergence_study(m, bands, 7, base_T, study_options(2));
  REQUIRE(study.fit);
  CHECK(study.status == FitStatus::ok);
  CHECK(study.fit->slope >= -2.5);
  CHECK(study.fit->slope <= -1.5);
  CHECK(study.fit->r_squared >= 0.95);
  CHECK(study.excluded_T.empty());
  CHECK(std::is_sorted(study.fit->T.begin(), study.fit->T.end()));
  CHECK(study.steps.back() > 4000);
  CHECK(study.intertwining_residual <= 1e-6);
  // dk * T >= 100 only from T = 1500 onwards.
  CHECK(std::none_of(study.gap_margin_ok.begin(), study.gap_margin_ok.end(), [](bool b) { return b; }));
  for (const auto& run : study.runs) {
    CHECK(run.eta_exact >= 0.0);
    CHECK(run.eta_exact <= 1.0 + 1e-10);
  }

  SUBCASE("doubling every T") {
    std::vector<double> doubled;
    for (double t : base_T) doubled.push_back(2.0 * t);
    const auto shifted = convergence_study(m, bands, 7, doubled, study_options(2));
    REQUIRE(shifted.fit);
    CHECK(std::abs(shifted.fit->slope - study.fit->slope) <= 0.2);
    for (std::size_t i = 1; i < study.runs.size(); ++i) {
      const double drop = std::log(shifted.runs[i - 1].eta_exact) - std::log(study.runs[i - 1].eta_exact);
      CHECK(std::abs(drop + 2.0 * std::log(2.0)) <= 0.5);
    }
  }

  SUBCASE("worker count does not change results") {
    const auto serial = convergence_study(m, bands, 7, base_T, study_options(1));
    REQUIRE(serial.fit);
    CHECK(serial.fit->slope == study.fit->slope);
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
      CHECK(serial.runs[i].eta_exact == study.runs[i].eta_exact);
      CHECK(serial.runs[i].eta_first_order == study.runs[i].eta_first_order);
      CHECK(serial.runs[i].w_deviation == study.runs[i].w_deviation);
    }
  }
}

TEST_CASE("convergence slope survives grid refinement") {
  const std::vector<double> T{100, 200, 400, 800};
  const auto coarse = convergence_study(oracle::default_model(), BandPartition(16, 2), 7, T, study_options(2));
  const auto fine = convergence_study(oracle::default_model(0.4, AngleProfile::cubic, 32),
                                      BandPartition(32, 4), 15, T, study_options(2));
  REQUIRE(coarse.fit);
  REQUIRE(fine.fit);
  CHECK(std::abs(fine.fit->slope - coarse.fit->slope) <= 0.2);
}

TEST_CASE("convergence study: frozen frame and errors") {
  const BandPartition bands(16, 2);
  const auto frozen = convergence_study(oracle::default_model(0.0), bands, 7, {50, 100, 200}, study_options());
  CHECK(frozen.status == FitStatus::trivially_adiabatic);
  CHECK_FALSE(frozen.fit);
  CHECK(frozen.excluded_T == std::vector<double>{50, 100, 200});
  CHECK(to_string(frozen.status) == "trivially_adiabatic");

  const auto m = oracle::default_model();
  CHECK_THROWS_AS(convergence_study(m, bands, 7, {100, 200}, study_options()), InvalidArgument);
  CHECK_THROWS_AS(convergence_study(m, bands, 7, {100, -1, 200}, study_options()), InvalidArgument);
  CHECK_THROWS_AS(convergence_study(m, bands, 16, {100, 200, 400}, study_options()), InvalidArgument);
}
