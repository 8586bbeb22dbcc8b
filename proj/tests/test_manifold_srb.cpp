#include "srbvol/error.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/manifold.hpp"
#include "srbvol/srb.hpp"
#include "srbvol/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace srbvol;

namespace {

struct Leaf {
  OrbitSplitting orbit;
  UnstableManifold manifold;
};

Leaf deep_leaf(const SmoothSystem& sys, int index = 150, int min_depth = 100) {
  auto orbit = split_orbit(sys, sys.attractor_point(), index + 10, 1, 80, 42);
  ManifoldOptions mo;
  mo.min_depth = min_depth;
  auto man = local_unstable_manifold(sys, orbit, index, mo);
  return {std::move(orbit), std::move(man)};
}

double max_abs_g(const LeafGraph& leaf) {
  double g = 0.0;
  for (int j = 0; j < leaf.size(); ++j) g = std::max(g, leaf.value(j).cwiseAbs().maxCoeff());
  return g;
}

}  // namespace

TEST_SUITE("manifold") {
  TEST_CASE("linear systems have flat leaves") {
    for (const char* s : {"diag_linear:2,0.5", "linear:2,1;1,1", "torus_linear:2,1;1,1"}) {
      CAPTURE(s);
      const auto sys = parse_system(s);
      const auto orbit = split_orbit(sys, sys.attractor_point(), 60, 1);
      const auto man = local_unstable_manifold(sys, orbit, 50);
      CHECK(max_abs_g(man.leaf()) <= 1e-12);
    }
  }

  TEST_CASE("flat input is left flat by a linear transform") {
    const auto sys = parse_system("diag_linear:2,0.5");
    const auto orbit = split_orbit(sys, sys.attractor_point(), 20, 1);
    const LeafGraph flat(chart_at(orbit, 9), LeafGrid{});
    const auto step = graph_transform_step(sys, flat, chart_at(orbit, 10));
    CHECK(max_abs_g(step.leaf) <= 1e-14);
  }

  TEST_CASE("solenoid graph transforms move toward the fixed graph") {
    const auto sys = parse_system("solenoid");
    const auto orbit = split_orbit(sys, sys.attractor_point(), 60, 1);
    LeafGraph g(chart_at(orbit, 30), LeafGrid{});
    const auto once = graph_transform_step(sys, g, chart_at(orbit, 31)).leaf;
    const auto twice = graph_transform_step(sys, once, chart_at(orbit, 32)).leaf;
    const auto thrice = graph_transform_step(sys, twice, chart_at(orbit, 33)).leaf;
    CHECK(max_abs_g(once) > 0.0);
    // Distances from one step to the next shrink.
    const auto once_b = graph_transform_step(sys, LeafGraph(chart_at(orbit, 31), LeafGrid{}), chart_at(orbit, 32)).leaf;
    const double d1 = twice.sup_distance(once_b, sys.space);
    const auto twice_b = graph_transform_step(sys, once_b, chart_at(orbit, 33)).leaf;
    CHECK(thrice.sup_distance(twice_b, sys.space) < d1);
  }

  TEST_CASE("graph transform contracts") {
    const auto sys = parse_system("solenoid", NormedSpace::parse("lp:2:3"));
    const auto orbit = split_orbit(sys, sys.attractor_point(), 80, 1);
    Rng rng(8);
    for (int i = 0; i < 5; ++i) CHECK(transform_contraction(sys, orbit, 40 + i, LeafGrid{}, rng) < 1.0);
  }

  TEST_CASE("solenoid leaf against the shooting oracle") {
    const auto sys = parse_system("solenoid");
    const auto leaf = deep_leaf(sys, 100, 0);
    CHECK(leaf.manifold.leaf().lipschitz(sys.space) <= 0.1);
    for (double a : {-0.4, -0.1, 0.0, 0.25, 0.45}) {
      const Vector s = shooting_point(sys, leaf.orbit, 100, 40, a);
      CHECK((s - leaf.manifold.leaf().eval(Vector::Constant(1, a))).cwiseAbs().maxCoeff() <= 1e-4);
    }
  }

  TEST_CASE("unconverged chains raise") {
    const auto sys = parse_system("solenoid");
    const auto orbit = split_orbit(sys, sys.attractor_point(), 60, 1);
    ManifoldOptions mo;
    mo.max_depth = mo.start_depth + mo.window - 1;
    CHECK_THROWS_AS(local_unstable_manifold(sys, orbit, 50, mo), ConvergenceError);
  }

  TEST_CASE("leaf volumes of flat and tilted leaves") {
    // Unstable direction (1, 1) for the symmetric map with eigenvalues 2 and 1/2.
    for (const auto& [space, ratio] :
         std::vector<std::pair<const char*, double>>{{"lp:inf:2", 1.0}, {"lp:1:2", 2.0}, {"lp:2:2", std::sqrt(2.0)}}) {
      CAPTURE(space);
      const auto sys = parse_system("linear:1.25,0.75;0.75,1.25", NormedSpace::parse(space));
      const auto orbit = split_orbit(sys, sys.attractor_point(), 40, 1);
      const auto man = local_unstable_manifold(sys, orbit, 30);
      const Vector u = man.leaf().chart().unstable.col(0);
      // u is Euclidean-normalized along (1, 1): |u| = ratio / sqrt 2 in each norm.
      const double len = sys.space.norm(u);
      CHECK(len == doctest::Approx(ratio / std::sqrt(2.0)).epsilon(1e-12));
      const auto v = leaf_volume(sys, man.leaf(), Vector::Constant(1, -0.3), Vector::Constant(1, 0.2));
      CHECK(v.value == doctest::Approx(0.5 * len).epsilon(1e-12));
    }
    const auto flat = parse_system("diag_linear:2,0.5", NormedSpace::parse("lp:1.5:2"));
    const auto orbit = split_orbit(flat, flat.attractor_point(), 40, 1);
    const auto man = local_unstable_manifold(flat, orbit, 30);
    const auto v = leaf_volume(flat, man.leaf(), Vector::Constant(1, -0.5), Vector::Constant(1, 0.5));
    CHECK(v.value == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("linear distortion is identically one") {
    const auto sys = parse_system("linear:1.25,0.75;0.75,1.25", NormedSpace::parse("lp:1:2"));
    const auto leaf = deep_leaf(sys);
    const auto& orbit = leaf.orbit;
    const auto& man = leaf.manifold;
    const auto t = distortion_table(sys, man, orbit);
    for (double ld : t.log_delta) CHECK(std::abs(ld) <= 1e-12);
    CHECK(t.log_delta[static_cast<std::size_t>(man.leaf().center())] == 0.0);
  }

  TEST_CASE("solenoid distortion converges geometrically") {
    const auto sys = parse_system("solenoid", NormedSpace::parse("lp:2:3"));
    const auto leaf = deep_leaf(sys);
    const auto t = distortion_table(sys, leaf.manifold, leaf.orbit);
    CHECK(t.rho < 1.0);
    CHECK(t.r_squared >= 0.99);
    CHECK(t.log_delta[static_cast<std::size_t>(leaf.manifold.leaf().center())] == 0.0);
  }

  TEST_CASE("change of variables holds and detects a missing jacobian") {
    const auto sys = parse_system("solenoid", NormedSpace::parse("lp:2:3"));
    const auto orbit = split_orbit(sys, sys.attractor_point(), 160, 1, 80, 42);
    const auto man = local_unstable_manifold(sys, orbit, 150);
    ManifoldOptions fine;
    fine.grid.nodes = 129;
    const auto ref = local_unstable_manifold(sys, orbit, 150, fine);
    const auto c = change_of_variables(sys, man, &ref, -0.1, 0.15);
    CHECK(std::abs(c.image_volume - c.jacobian_integral) <= 3.0 * c.sigma);
    // Without J^u the same region has about half the image volume.
    const auto plain = leaf_integral(sys, ref.leaves[1], -0.1, 0.15, [](double) { return 1.0; });
    CHECK(std::abs(c.image_volume - plain.value) > 1e6 * c.sigma);
  }
}

TEST_SUITE("srb") {
  TEST_CASE("linear leaves carry the normalized leaf volume") {
    const auto sys = parse_system("torus_linear:2,1;1,1");
    const auto leaf = deep_leaf(sys);
    const auto& orbit = leaf.orbit;
    const auto& man = leaf.manifold;
    const auto q = srb_density(sys, man.leaf(), distortion_table(sys, man, orbit));
    const double nu = leaf_volume(sys, man.leaf(), Vector::Constant(1, -0.5), Vector::Constant(1, 0.5)).value;
    for (double v : q.q) CHECK(v == doctest::Approx(1.0 / nu).epsilon(1e-12));
    for (double m : predicted_bin_masses(sys, man.leaf(), q, 16)) CHECK(m == doctest::Approx(1.0 / 16).epsilon(1e-12));
  }

  TEST_CASE("solenoid bin masses follow the angle coordinate") {
    // The SRB measure projects to Lebesgue measure in theta, so a bin's mass
    // is its share of the leaf's theta extent.
    const auto sys = parse_system("solenoid", NormedSpace::parse("lp:2:3"));
    const auto leaf = deep_leaf(sys);
    const auto& g = leaf.manifold.leaf();
    const auto q = srb_density(sys, g, distortion_table(sys, leaf.manifold, leaf.orbit));
    const int bins = 16;
    const auto masses = predicted_bin_masses(sys, g, q, bins);
    auto theta = [&](double a) { return g.offset(Vector::Constant(1, a))[0]; };
    const double r = g.grid().radius;
    const double total = theta(r) - theta(-r);
    double sum = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double lo = -r + 2 * r * b / bins, hi = -r + 2 * r * (b + 1) / bins;
      CHECK(masses[static_cast<std::size_t>(b)] == doctest::Approx((theta(hi) - theta(lo)) / total).epsilon(1e-6));
      sum += masses[static_cast<std::size_t>(b)];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("empirical histogram near the prediction and independent of workers") {
    const auto sys = parse_system("solenoid", NormedSpace::parse("lp:2:3"));
    const auto leaf = deep_leaf(sys);
    const auto& g = leaf.manifold.leaf();
    const auto q = srb_density(sys, g, distortion_table(sys, leaf.manifold, leaf.orbit));
    const auto masses = predicted_bin_masses(sys, g, q, 64);
    EmpiricalOptions eo;
    eo.n_orbit = 1'000'000;
    const auto a = empirical_conditional(sys, g, eo, &masses);
    eo.workers = 3;
    const auto b = empirical_conditional(sys, g, eo, &masses);
    CHECK(a.counts == b.counts);
    CHECK(*a.l1 <= 0.1);
    CHECK(std::accumulate(a.histogram.begin(), a.histogram.end(), 0.0) == doctest::Approx(1.0));
  }

  TEST_CASE("torus histogram is flat") {
    const auto sys = parse_system("torus_linear:2,1;1,1");
    const auto orbit = split_orbit(sys, sys.attractor_point(), 60, 1);
    const auto man = local_unstable_manifold(sys, orbit, 50);
    EmpiricalOptions eo;
    eo.n_orbit = 2'000'000;
    eo.thickness = 0.05;
    eo.bins = 16;
    const auto e = empirical_conditional(sys, man.leaf(), eo);
    const double mean = static_cast<double>(e.hits) / 16.0;
    for (long c : e.counts) CHECK(std::abs(static_cast<double>(c) - mean) <= 4.0 * std::sqrt(mean));
  }

  TEST_CASE("an empty window is an error") {
    const auto sys = parse_system("solenoid");
    const auto leaf = deep_leaf(sys, 60, 0);
    EmpiricalOptions eo;
    eo.n_orbit = 20000;
    eo.thickness = 1e-9;
    CHECK_THROWS_AS(empirical_conditional(sys, leaf.manifold.leaf(), eo), InsufficientDataError);
  }

  TEST_CASE("entropy routes") {
    const auto sol = parse_system("solenoid");
    LyapunovOptions lo;
    lo.n_steps = 100000;
    const auto rep = entropy_formula_report(sol, lyapunov_spectrum(sol, sol.attractor_point(), lo));
    CHECK(rep.rows.all_pass());
    CHECK(rep.ju_average == doctest::Approx(std::log(2.0)).epsilon(1e-3));

    const auto diag = parse_system("diag_linear:2,0.5");
    const auto drep = entropy_formula_report(diag, lyapunov_spectrum(diag, diag.attractor_point(), lo));
    CHECK_FALSE(drep.srb);
    CHECK(drep.rows.all_pass());
    CHECK_FALSE(drep.notes.empty());
  }
}
