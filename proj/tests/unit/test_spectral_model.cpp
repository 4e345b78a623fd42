#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>

#include "adiabatic/errors.hpp"
#include "adiabatic/spectral_model.hpp"
#include "adiabatic/weyl_bands.hpp"

using namespace adiabatic;

TEST_CASE("KGrid is uniform and validated") {
  const KGrid g(1.0, 2.0, 16);
  CHECK(g.size() == 16);
  CHECK(g.spacing() == doctest::Approx(1.0 / 15.0));
  CHECK(g.node(0) == 1.0);
  CHECK(g.node(15) == doctest::Approx(2.0));
  for (std::size_t j = 1; j < g.size(); ++j) {
    CHECK(g.node(j) > g.node(j - 1));
    CHECK(std::abs((g.node(j) - g.node(j - 1)) / g.spacing() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(KGrid(1.0, 2.0, 1), InvalidArgument);
  CHECK_THROWS_AS(KGrid(2.0, 1.0, 4), InvalidArgument);
  CHECK_THROWS_AS(g.node(16), InvalidArgument);
}

TEST_CASE("eigenvalues follow the dispersion schedule") {
  // Grid {1, 1.5, 2}: k_2 = 2.
  const ContinuumModel m = build_model(KGrid(1.0, 2.0, 3), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                                       FrameRotation::nearest_neighbor(3, AngleSchedule(AngleProfile::cubic, 0.3)));
  CHECK(m.eigenvalue(2, 0.5) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(m.eigenvalue(1, 0.0) == 1.5);
  CHECK(m.eigenvalue_rate(2, 0.3) == doctest::Approx(2.0));

  const ContinuumModel q = build_model(KGrid(1.0, 2.0, 3), DispersionSchedule::quadratic({1.0, 0.5, 0.0, 0.0}),
                                       FrameRotation::nearest_neighbor(3, AngleSchedule(AngleProfile::cubic, 0.3)));
  CHECK(q.eigenvalue(1, 1.0) == doctest::Approx(3.375).epsilon(1e-15));

  CHECK_THROWS_AS(m.eigenvalue(3, 0.5), InvalidArgument);
  CHECK_THROWS_AS(m.eigenvalue(0, 1.5), InvalidArgument);
  CHECK_THROWS_AS(m.eigenvalue(0, -0.1), InvalidArgument);
}

TEST_CASE("tabulated dispersion interpolates linearly between knots") {
  const auto d = DispersionSchedule::tabulated({{1.0, 2.0}, {2.0, 4.0}, {1.5, 5.0}});
  CHECK(d.energy(0.0, 0, 0.25) == doctest::Approx(1.5));
  CHECK(d.energy(0.0, 1, 0.75) == doctest::Approx(4.5));
  CHECK(d.energy_rate(0.0, 1, 0.25) == doctest::Approx(4.0));
  CHECK(d.energy_rate(0.0, 1, 0.75) == doctest::Approx(2.0));
  CHECK(d.knots() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(d.required_grid_size() == 2u);
  CHECK_THROWS_AS(DispersionSchedule::tabulated({{1.0, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(DispersionSchedule::tabulated({{1.0, 2.0}, {1.0}}), InvalidArgument);
}

TEST_CASE("frozen frame keeps the standard basis") {
  const ContinuumModel m = build_model(KGrid(1.0, 2.0, 8), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                                       FrameRotation::nearest_neighbor(8, AngleSchedule(AngleProfile::cubic, 0.0)));
  for (double s : {0.0, 0.3, 1.0}) {
    CHECK(max_abs(m.frame(s) - Matrix::Identity(8, 8)) == 0.0);
    for (std::size_t j = 0; j < 8; ++j) {
      Vector e = Vector::Zero(8);
      e(static_cast<Eigen::Index>(j)) = 1.0;
      CHECK(oracle::max_abs(m.frame_vector(j, s) - e) == 0.0);
      CHECK(oracle::max_abs(m.frame_velocity(j, s)) == 0.0);
    }
    const Matrix h = m.hamiltonian(s);
    CHECK(max_abs(h - Matrix(m.eigenvalues(s).cast<Complex>().asDiagonal())) < 1e-15);
  }
}

TEST_CASE("frame vectors match a Taylor series of exp(theta G)") {
  SUBCASE("two-level rotation reaches e_1 at theta = pi/2") {
    Matrix g(2, 2);
    g << 0.0, 1.0, -1.0, 0.0;
    const double theta_max = M_PI / 2.0;
    const ContinuumModel m = build_model(KGrid(1.0, 2.0, 2), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                                         FrameRotation::custom(g, AngleSchedule(AngleProfile::linear, theta_max)));
    const Vector phi = m.frame_vector(0, 1.0);
    const Vector expected = oracle::taylor_exp(theta_max * g).col(0);
    CHECK(oracle::max_abs(phi - expected) < 1e-14);
    CHECK(std::abs(std::abs(phi(1)) - 1.0) < 1e-14);
    CHECK(std::abs(phi(0)) < 1e-14);
  }
  SUBCASE("default model") {
    const ContinuumModel m = oracle::default_model();
    const Matrix g = oracle::nearest_neighbor_generator(16);
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Matrix expected = oracle::taylor_exp(m.rotation().schedule.angle(s) * g);
      CHECK(oracle::max_abs(m.frame(s) - expected) < 1e-14);
    }
    CHECK(oracle::max_abs(m.frame(0.0) - Matrix::Identity(16, 16)) == 0.0);
  }
}

TEST_CASE("frame is orthonormal") {
  for (auto profile : {AngleProfile::cubic, AngleProfile::smoothstep, AngleProfile::linear}) {
    const ContinuumModel m = oracle::default_model(0.4, profile);
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Matrix r = m.frame(s);
      CHECK(oracle::max_abs(r.adjoint() * r - Matrix::Identity(16, 16)) < 1e-12);
    }
  }
}

TEST_CASE("frame velocity matches central differences") {
  const double h = 1e-5;
  for (auto profile : {AngleProfile::cubic, AngleProfile::smoothstep}) {
    const ContinuumModel m = oracle::default_model(0.4, profile);
    const std::vector<std::pair<std::size_t, double>> probes{{0, 0.2}, {3, 0.4}, {7, 0.5}, {11, 0.7}, {15, 0.9}};
    for (auto [j, s] : probes) {
      const Vector fd = (m.frame_vector(j, s + h) - m.frame_vector(j, s - h)) / (2.0 * h);
      CHECK(oracle::max_abs(m.frame_velocity(j, s) - fd) < 1e-8);
      const Vector fd2 = (m.frame_velocity(j, s + h) - m.frame_velocity(j, s - h)) / (2.0 * h);
      CHECK(oracle::max_abs(m.frame_acceleration(j, s) - fd2) < 1e-8);
    }
  }
  SUBCASE("smoothstep endpoints are at rest") {
    const ContinuumModel m = oracle::default_model(0.4, AngleProfile::smoothstep);
    for (std::size_t j : {0u, 8u, 15u}) {
      CHECK(oracle::max_abs(m.frame_velocity(j, 0.0)) == 0.0);
      CHECK(oracle::max_abs(m.frame_velocity(j, 1.0)) == 0.0);
    }
  }
}

TEST_CASE("couplings equal theta' G and the generic inner product") {
  const ContinuumModel m = oracle::default_model();
  const Matrix g = oracle::nearest_neighbor_generator(16);
  for (double s : {0.1, 0.5, 0.9}) {
    const Matrix r = m.frame(s);
    const Matrix rd = m.frame_derivative(s);
    const Matrix generic = r.adjoint() * rd;
    CHECK(oracle::max_abs(m.couplings(s) - m.rotation().schedule.rate(s) * g) < 1e-15);
    CHECK(oracle::max_abs(m.couplings(s) - generic) < 1e-12);
    for (std::size_t a = 0; a < 16; ++a) {
      CHECK(m.coupling(a, a, s) == Complex(0.0));
      for (std::size_t b = 0; b < 16; ++b) {
        const Complex ip = m.frame_vector(a, s).dot(m.frame_velocity(b, s));
        CHECK(std::abs(m.coupling(a, b, s) - ip) < 1e-12);
      }
    }
    const double h = 1e-5;
    CHECK(std::abs(m.coupling_rate(6, 7, s) - (m.coupling(6, 7, s + h) - m.coupling(6, 7, s - h)) / (2 * h)) < 1e-8);
  }
}

TEST_CASE("hamiltonian is Hermitian with the scheduled spectrum") {
  for (auto profile : {AngleProfile::cubic, AngleProfile::smoothstep}) {
    const ContinuumModel m = oracle::default_model(0.4, profile);
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Matrix h = m.hamiltonian(s);
      CHECK(oracle::max_abs(h - h.adjoint()) <= 1e-13);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
      std::vector<double> expected(16);
      for (std::size_t j = 0; j < 16; ++j) expected[j] = m.eigenvalue(j, s);
      std::sort(expected.begin(), expected.end());
      for (std::size_t j = 0; j < 16; ++j) {
        CHECK(std::abs(eig.eigenvalues()(static_cast<Eigen::Index>(j)) - expected[j]) < 1e-10);
      }
    }
  }
}

TEST_CASE("build_model rejects invalid input") {
  const AngleSchedule sched(AngleProfile::cubic, 0.4);
  const auto lin = DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0});

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(build_model(KGrid(1.0, 2.0, 8), lin, FrameRotation::nearest_neighbor(7, sched)), InvalidArgument);
    const auto tab = DispersionSchedule::tabulated({{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}});
    CHECK_THROWS_AS(build_model(KGrid(1.0, 2.0, 4), tab, FrameRotation::nearest_neighbor(4, sched)), InvalidArgument);
  }
  SUBCASE("generator gauge") {
    Matrix g = oracle::nearest_neighbor_generator(4);
    g(1, 1) = Complex(0.0, 1e-3);
    CHECK_THROWS_AS(build_model(KGrid(1.0, 2.0, 4), lin, FrameRotation::custom(g, sched)), InvalidArgument);
    Matrix h = oracle::nearest_neighbor_generator(4);
    h(0, 1) = 2.0;
    CHECK_THROWS_AS(build_model(KGrid(1.0, 2.0, 4), lin, FrameRotation::custom(h, sched)), InvalidArgument);
  }
  SUBCASE("collapse at s = 1/2") {
    // E = k (1 - 2 s): every level reaches zero at s = 1/2.
    try {
      build_model(KGrid(1.0, 2.0, 8), DispersionSchedule::linear({1.0, -2.0, 0.0, 0.0}),
                  FrameRotation::nearest_neighbor(8, sched));
      FAIL("expected a crossing");
    } catch (const CrossingError& e) {
      CHECK(e.s() == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("random_banded generator is reproducible from its seed") {
  const AngleSchedule sched(AngleProfile::cubic, 0.4);
  const auto a = FrameRotation::random_banded(10, 3, 42, sched);
  const auto b = FrameRotation::random_banded(10, 3, 42, sched);
  const auto c = FrameRotation::random_banded(10, 3, 43, sched);
  CHECK(oracle::max_abs(a.generator - b.generator) == 0.0);
  CHECK(oracle::max_abs(a.generator - c.generator) > 0.0);
  CHECK(oracle::max_abs(a.generator + a.generator.adjoint()) == 0.0);
  CHECK(a.generator.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.generator(0, 4) == Complex(0.0));
  // First draw of splitmix64 seeded with 42.
  SplitMix64 rng(42);
  CHECK(rng.next() == 0xbdd732262feb6e95ULL);
}

TEST_CASE("noncrossing report") {
  const ContinuumModel m = oracle::default_model();

  SUBCASE("uniform linear dispersion") {
    const auto rep = validate_noncrossing(m, BandPartition(16, 2), 101);
    CHECK(rep.ok);
    CHECK(rep.min_separation == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
    for (const auto& b : rep.bands) {
      CHECK_FALSE(b.crossing);
      CHECK(b.s_at_min == 0.0);
    }
  }
  SUBCASE("single band is vacuously fine") {
    const auto rep = validate_noncrossing(m, BandPartition(16, 16), 11);
    CHECK(rep.ok);
  }
  SUBCASE("engineered crossing is bracketed") {
    // E = k + 2 s (k_max - k): all levels meet k_max at s = 1/2.
    const KGrid grid(1.0, 2.0, 8);
    const auto d = DispersionSchedule::linear({1.0, -2.0, 0.0, 2.0 * grid.k_max()});
    const BandPartition p(8, 2);
    const auto rep = validate_noncrossing(grid, d, p, 21);
    CHECK_FALSE(rep.ok);
    REQUIRE(rep.interval.has_value());

    // Dense scan at 10x the sampling: where does the in/out separation vanish?
    double zero_at = -1.0;
    for (double s : oracle::linspace(0.0, 1.0, 201)) {
      const double sep = std::abs(d.energy(grid.node(1), 1, s) - d.energy(grid.node(2), 2, s));
      if (sep <= kCrossingTolerance) zero_at = s;
    }
    REQUIRE(zero_at >= 0.0);
    CHECK(rep.interval->first <= zero_at);
    CHECK(rep.interval->second >= zero_at);
    CHECK(rep.interval->second - rep.interval->first <= 0.1 + 1e-12);
  }
  SUBCASE("order swap between samples is caught") {
    // Levels 0 and 1 swap at s = 0.53, between samples of an 11-point scan.
    const KGrid grid(1.0, 2.0, 2);
    const auto d = DispersionSchedule::tabulated({{1.0, 2.0}, {2.0, 2.0 - 0.47 / 0.53}});
    const auto rep = validate_noncrossing(grid, d, BandPartition(2, 1), 11);
    CHECK_FALSE(rep.ok);
    REQUIRE(rep.interval.has_value());
    CHECK(rep.interval->first <= 0.53);
    CHECK(rep.interval->second >= 0.53);
  }
}
