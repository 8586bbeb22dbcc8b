#include "srbvol/error.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/systems.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace srbvol;

namespace {

// 2 log((1 + sqrt 5) / 2): log of the cat map's expanding eigenvalue
// (3 + sqrt 5) / 2, evaluated in long double and frozen.
constexpr double kCatExponent = 0.9624236501192068949;

LyapunovOptions steps(long n, std::uint64_t seed = 4) {
  LyapunovOptions o;
  o.n_steps = n;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_SUITE("systems") {
  TEST_CASE("frozen cat exponent") {
    const long double phi = (1.0L + std::sqrt(5.0L)) / 2.0L;
    CHECK(static_cast<double>(2.0L * std::log(phi)) == doctest::Approx(kCatExponent).epsilon(1e-16));
  }

  TEST_CASE("built-in systems pass their probes") {
    for (const char* s : {"solenoid", "diag_linear:2,0.5", "linear:2,1;1,1", "torus_linear:2,1;1,1",
                          "dissipative_galerkin"}) {
      CAPTURE(s);
      const auto sys = parse_system(s);
      CHECK(probe_system(sys).all_pass());
    }
  }

  TEST_CASE("invalid parameters are input errors") {
    CHECK_THROWS_AS(parse_system("solenoid:2.5"), InputError);
    CHECK_THROWS_AS(parse_system("torus_linear:1.5,1;1,1"), InputError);
    CHECK_THROWS_AS(parse_system("torus_linear:2,0;0,1"), InputError);
    CHECK_THROWS_AS(parse_system("henon"), InputError);
    CHECK_THROWS_AS(system_from_json(json::object()), InputError);
  }

  TEST_CASE("torus map wraps every coordinate") {
    const auto cat = parse_system("torus_linear:2,1;1,1");
    const Vector x = cat.iterate(cat.initial_point, 50);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() < 2 * M_PI);
  }

  TEST_CASE("kuratowski bounds") {
    CHECK(kuratowski_bound(LinearMap::dense(Matrix::Random(10, 10))) == 0.0);
    Vector tail(3);
    tail << 0.3, -0.25, 0.1;
    CHECK(kuratowski_bound(LinearMap::structured(Matrix::Zero(6, 6), tail)) == doctest::Approx(0.3));
    CHECK(kuratowski_bound(LinearMap::structured(Matrix::Zero(4, 4), Vector::Zero(2))) == 0.0);
    const auto g = parse_system("dissipative_galerkin");
    CHECK(kuratowski_bound(g.derivative(g.attractor_point())) < 1.0);
  }
}

TEST_SUITE("lyapunov") {
  TEST_CASE("diagonal cocycle in three norms") {
    for (const char* s : {"lp:inf:2", "lp:2:2", "lp:1:2"}) {
      CAPTURE(s);
      const auto sys = parse_system("diag_linear:2,0.5", NormedSpace::parse(s));
      const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), steps(1000));
      CHECK(std::abs(rep.exponents[0] - std::log(2.0)) <= 1e-9);
      CHECK(std::abs(rep.exponents[1] + std::log(2.0)) <= 1e-9);
      CHECK(rep.unstable_dim == 1);
    }
  }

  TEST_CASE("unimodular cocycle preserves euclidean area") {
    const auto sys = parse_system("linear:2,1;1,1", NormedSpace::parse("lp:2:2"));
    const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), steps(2000));
    CHECK(std::abs(rep.sums[1]) <= 1e-9);
    CHECK(std::abs(rep.exponents[0] - kCatExponent) <= 1e-9);
  }

  TEST_CASE("solenoid exponents") {
    const auto sys = parse_system("solenoid");
    const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), steps(20000));
    CHECK(rep.exponents[0] == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    CHECK(rep.exponents[1] == doctest::Approx(std::log(0.25)).epsilon(1e-3));
    CHECK(rep.exponents[2] == doctest::Approx(std::log(0.25)).epsilon(1e-3));
    REQUIRE(rep.distinct.size() == 2);
    CHECK(rep.multiplicities[1] == 2);
  }

  TEST_CASE("runs repeat exactly and ignore the worker count") {
    const auto sys = parse_system("solenoid", NormedSpace::parse("lp:2:3"));
    auto o = steps(3000, 17);
    const auto a = lyapunov_spectrum(sys, sys.attractor_point(), o);
    o.mc.workers = 2;
    const auto b = lyapunov_spectrum(sys, sys.attractor_point(), o);
    CHECK(a.to_json().dump() == b.to_json().dump());
  }

  TEST_CASE("unstable frame of the diagonal map") {
    const auto sys = parse_system("diag_linear:2,0.5");
    const auto hist = make_history(sys, sys.attractor_point(), 80);
    const auto uf = unstable_frame(sys, hist, 1);
    CHECK(std::abs(uf.basis(1, 0)) <= 1e-8);
    CHECK(uf.warnings.empty());
  }

  TEST_CASE("unstable frame warns on short or reversed histories") {
    const auto sys = parse_system("solenoid");
    const auto short_hist = make_history(sys, sys.attractor_point(), 8);
    CHECK_FALSE(unstable_frame(sys, short_hist, 1).warnings.empty());
    auto reversed = make_history(sys, sys.attractor_point(), 60);
    std::reverse(reversed.points.begin(), reversed.points.end());
    CHECK_FALSE(unstable_frame(sys, reversed, 1).warnings.empty());
  }

  TEST_CASE("solenoid unstable frame is invariant") {
    const auto sys = parse_system("solenoid");
    const auto hist = make_history(sys, sys.attractor_point(), 400);
    const auto uf = unstable_frame(sys, hist, 1);
    CHECK(uf.invariance_residual <= 1e-6);
    CHECK(uf.convergence_gap <= 1e-8);
  }

  TEST_CASE("adapted norms") {
    const auto sys = parse_system("diag_linear:2,0.5");
    const auto params = AdaptedNormParams::from_exponents({std::log(2.0), -std::log(2.0)});
    const auto orbit = split_orbit(sys, sys.attractor_point(), 2 * params.max_terms + 20, 1);
    CHECK(adapted_norm(sys, orbit, params.max_terms, Vector::Zero(2), params).value == 0.0);
    ChartQualityOptions co;
    co.samples = 4;
    const auto q = chart_quality(sys, orbit, params, co);
    for (double c : q.c) CHECK(c == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(q.checks.all_pass());
  }
}
