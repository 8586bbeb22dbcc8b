#include "srbvol/acceptance.hpp"

#include "srbvol/checks.hpp"
#include "srbvol/error.hpp"
#include "srbvol/format.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/manifold.hpp"
#include "srbvol/srb.hpp"
#include "srbvol/systems.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace srbvol {

namespace {

struct Sizes {
  int axiom_cases, john_vectors, bounds_rows, geometry_pairs;
  long lyap_steps, empirical_points;
  double axiom_rel_err, analytic_rel_err;
};

Sizes sizes_for(const std::string& level) {
  if (level == "full") return {200, 10000, 500, 100, 100000, 10'000'000, 1e-3, 1e-3};
  if (level == "quick") return {12, 1000, 40, 10, 100000, 10'000'000, 1e-2, 1e-2};
  throw InputError("suite level must be 'full' or 'quick'");
}

struct Builtin {
  std::string label;
  json config;
};

std::vector<Builtin> builtin_systems() {
  return {
      {"diag_linear_linf", {{"kind", "diag_linear"}, {"diag", {2.0, 0.5}}}},
      {"cat_linear_l2", {{"kind", "linear"}, {"matrix", {{2, 1}, {1, 1}}}, {"space", "lp:2:2"}}},
      {"cat_torus_linf", {{"kind", "torus_linear"}, {"matrix", {{2, 1}, {1, 1}}}}},
      {"solenoid_linf", {{"kind", "solenoid"}}},
      {"solenoid_l2", {{"kind", "solenoid"}, {"space", "lp:2:3"}}},
      {"galerkin_linf", {{"kind", "dissipative_galerkin"}}},
      {"galerkin_l2", {{"kind", "dissipative_galerkin"}, {"space", "lp:2:16"}}},
  };
}

SmoothSystem make(const std::string& label) {
  for (const auto& b : builtin_systems()) {
    if (b.label == label) return system_from_json(b.config);
  }
  throw InputError("unknown built-in system " + label);
}

std::string counts(const BoundReport& r) {
  std::ostringstream os;
  os << r.failures() << " failing of " << r.evaluated() << " evaluated rows";
  return os.str();
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

constexpr double kBelowOne = 1.0 - 1e-12;

}  // namespace

bool SuiteResult::all_pass() const {
  for (const auto& c : criteria) {
    if (!c.pass) return false;
  }
  return true;
}

json SuiteResult::to_json() const {
  json crit = json::array();
  for (const auto& c : criteria) crit.push_back({{"id", c.id}, {"title", c.title}, {"pass", c.pass}, {"detail", c.detail}});
  json sec = json::object();
  for (const auto& [name, rep] : sections) sec[name] = rep.to_json();
  return {{"level", options.level}, {"seed", options.seed}, {"criteria", crit}, {"sections", sec}};
}

std::string SuiteResult::to_csv() const {
  Table t;
  t.push_back({"section", "statement", "lhs", "rhs", "slack", "pass", "vacuous", "note"});
  for (const auto& [name, rep] : sections) {
    const auto rows = rep.table();
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::vector<std::string> row{name};
      row.insert(row.end(), rows[i].begin(), rows[i].end());
      t.push_back(row);
    }
  }
  Metadata meta{{"command", "suite"}, {"level", options.level}, {"seed", std::to_string(options.seed)}};
  for (const auto& c : criteria) meta.push_back({"criterion_" + std::to_string(c.id), c.pass ? "pass" : "fail"});
  return srbvol::to_csv(t, meta);
}

std::string criterion_line(const CriterionResult& c) {
  std::ostringstream os;
  os << (c.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.title << ": " << c.detail;
  if (c.seconds > 0) {
    os << " [" << num(c.seconds) << " s";
    if (c.time_limit > 0) os << ", limit " << num(c.time_limit) << " s";
    os << "]";
  }
  return os.str();
}

CriterionResult determinism_criterion(const SuiteResult& a, const SuiteResult& b) {
  CriterionResult c;
  c.id = 12;
  c.title = "determinism";
  const bool json_same = to_json_text(a.to_json()) == to_json_text(b.to_json());
  const bool csv_same = a.to_csv() == b.to_csv();
  c.pass = json_same && csv_same;
  c.detail = std::string("JSON ") + (json_same ? "identical" : "differs") + ", CSV " +
             (csv_same ? "identical" : "differs") + " across two runs with seed " + std::to_string(a.options.seed);
  return c;
}

SuiteResult run_suite(const SuiteOptions& opt, const std::function<void(const CriterionResult&)>& progress) {
  const Sizes sz = sizes_for(opt.level);
  SuiteResult out;
  out.options = opt;
  auto section = [&](const std::string& name) -> BoundReport& {
    out.sections.push_back({name, BoundReport{}});
    return out.sections.back().second;
  };
  auto finish = [&](CriterionResult c, const Timer& t) {
    c.seconds = t.seconds();
    c.pass = c.pass && c.within_time();
    out.criteria.push_back(c);
    if (progress) progress(out.criteria.back());
  };

  // Smoothness and injectivity probes for every built-in system.
  {
    BoundReport& probes = section("system_probes");
    for (const auto& b : builtin_systems()) {
      const BoundReport r = probe_system(system_from_json(b.config));
      for (auto row : r.rows) {
        row.statement = b.label + ":" + row.statement;
        probes.rows.push_back(row);
      }
    }
  }

  // 1. Volume axioms.
  {
    Timer t;
    VolumeAxiomConfig cfg;
    cfg.cases = sz.axiom_cases;
    cfg.mc.target_rel_err = sz.axiom_rel_err;
    cfg.mc.workers = opt.workers;
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;
    BoundReport& r = section("volume_axioms");
    r = verify_volume_axioms(cfg);
    CriterionResult c{1, "volume axioms", r.all_pass() && static_cast<int>(r.evaluated()) >= cfg.cases, counts(r)};
    c.time_limit = 300;
    finish(c, t);
  }

  // 2. Analytic unit-ball volumes in R^2.
  {
    Timer t;
    BoundReport& r = section("analytic_volumes");
    const std::vector<std::pair<std::string, double>> cases{{"lp:inf:2", 4.0}, {"lp:1:2", 2.0}, {"lp:2:2", M_PI}};
    std::uint64_t i = 0;
    std::string detail;
    for (const auto& [space, exact] : cases) {
      MonteCarloOptions mc;
      mc.target_rel_err = sz.analytic_rel_err;
      mc.seed = mix_seed(opt.seed, i++);
      mc.workers = opt.workers;
      const auto v = unit_ball_coord_volume(Frame(NormedSpace::parse(space), Matrix::Identity(2, 2)), mc);
      r.check("unit_ball_volume_" + space, std::abs(v.value - exact), 3.0 * v.std_error, 0.0, 0.0).note =
          "estimate " + fmt_double(v.value) + ", exact " + fmt_double(exact);
      detail += space + " " + num(v.value) + " (exact " + num(exact) + ") ";
    }
    finish({2, "analytic volumes", r.all_pass(), detail + "within 3 sigma: " + counts(r)}, t);
  }

  // 3. John sandwich.
  {
    Timer t;
    JohnSandwichConfig cfg;
    cfg.vectors = sz.john_vectors;
    cfg.seed = opt.seed;
    BoundReport& r = section("john_sandwich");
    r = verify_john_sandwich(cfg);
    finish({3, "john sandwich", r.all_pass(), counts(r) + " over " + std::to_string(cfg.vectors) + " vectors each"}, t);
  }

  // 4. Subspace inequality battery.
  {
    Timer t;
    SubspaceBoundsConfig cfg;
    cfg.min_rows = sz.bounds_rows;
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;
    cfg.mc.workers = opt.workers;
    BoundReport& r = section("subspace_inequalities");
    r = verify_subspace_bounds(cfg);
    std::string consts;
    for (const auto& [k, v] : r.constants) consts += " " + k + "=" + num(v);
    finish({4, "subspace inequality battery",
            r.all_pass() && static_cast<int>(r.evaluated()) >= cfg.min_rows, counts(r) + ";" + consts},
           t);
  }

  {
    GeometryBatteryConfig cfg;
    cfg.pairs = sz.geometry_pairs;
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;
    section("geometry_invariants") = verify_geometry_invariants(cfg);
  }

  // 5. Lyapunov spectra.
  std::map<std::string, LyapunovReport> spectra;
  {
    Timer t;
    BoundReport& r = section("lyapunov");
    LyapunovOptions lo;
    lo.n_steps = sz.lyap_steps;
    lo.seed = opt.seed;
    lo.mc.workers = opt.workers;
    const double l2 = std::log(2.0);
    for (const std::string space : {"lp:inf:2", "lp:2:2", "lp:1:2"}) {
      auto sys = system_from_json({{"kind", "diag_linear"}, {"diag", {2.0, 0.5}}, {"space", space}});
      const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), lo);
      r.check("diag_exponent_1_" + space, std::abs(rep.exponents[0] - l2), 1e-9, 0.0, 0.0);
      r.check("diag_exponent_2_" + space, std::abs(rep.exponents[1] + l2), 1e-9, 0.0, 0.0);
      if (space == "lp:inf:2") spectra["diag_linear_linf"] = rep;
    }
    {
      auto sys = make("cat_linear_l2");
      const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), lo);
      const double phi2 = 2.0 * std::log((1.0 + std::sqrt(5.0)) / 2.0);
      r.check("unimodular_exponent_sum_l2", std::abs(rep.sums[1]), 1e-9, 0.0, 0.0);
      r.check("unimodular_exponent_1_l2", std::abs(rep.exponents[0] - phi2), 1e-9, 0.0, 0.0);
      spectra["cat_linear_l2"] = rep;
    }
    Timer ts;
    for (const std::string label : {"solenoid_linf", "solenoid_l2"}) {
      auto sys = make(label);
      const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), lo);
      const auto& known = sys.known->exponents;
      for (std::size_t i = 0; i < known.size(); ++i) {
        r.check(label + "_exponent_" + std::to_string(i + 1), std::abs(rep.exponents[i] - known[i]), 1e-3, 0.0, 0.0)
            .note = "computed " + fmt_double(rep.exponents[i]) + " +- " + fmt_double(rep.sigma[i]);
      }
      r.check(label + "_unstable_dimension", std::abs(rep.unstable_dim - 1), 0.0, 0.0, 0.0);
      spectra[label] = rep;
    }
    const auto& s = spectra["solenoid_linf"];
    CriterionResult c{5, "lyapunov exponents", r.all_pass(),
                      counts(r) + "; solenoid " + num(s.exponents[0]) + ", " + num(s.exponents[1]) + ", " +
                          num(s.exponents[2]) + " at " + std::to_string(lo.n_steps) + " steps"};
    c.time_limit = 120;
    finish(c, t);
  }

  // 6. Nested frames against standalone runs.
  {
    Timer t;
    BoundReport& r = section("nested_vs_standalone");
    LyapunovOptions lo;
    lo.n_steps = sz.lyap_steps;
    lo.seed = opt.seed;
    lo.mc.workers = opt.workers;
    for (const auto& b : builtin_systems()) {
      if (b.label == "galerkin_l2") continue;  // same dynamics as galerkin_linf
      auto sys = system_from_json(b.config);
      const Vector x0 = sys.attractor_point();
      if (!spectra.count(b.label)) spectra[b.label] = lyapunov_spectrum(sys, x0, lo);
      const auto& nested = spectra[b.label];
      for (std::size_t j = 1; j <= nested.sums.size(); ++j) {
        LyapunovOptions so = lo;
        so.k = static_cast<int>(j);
        so.seed = mix_seed(opt.seed, 1000 + j);
        const auto alone = lyapunov_spectrum(sys, x0, so);
        const double sig = std::hypot(nested.sums_sigma[j - 1], alone.sums_sigma[j - 1]);
        r.check(b.label + "_sum_" + std::to_string(j), std::abs(nested.sums[j - 1] - alone.sums[j - 1]), 3.0 * sig,
                0.0, 0.0);
      }
    }
    finish({6, "nested frames vs standalone runs", r.all_pass(), counts(r) + " within 3 combined sigma"}, t);
  }

  // Unstable frames and adapted charts along the solenoid orbit.
  {
    BoundReport& r = section("adapted_charts");
    for (const std::string label : {"solenoid_linf", "solenoid_l2", "galerkin_linf"}) {
      auto sys = make(label);
      const auto hist = make_history(sys, sys.attractor_point(), 400);
      UnstableFrameOptions uo;
      uo.seed = opt.seed;
      const auto uf = unstable_frame(sys, hist, 1, uo);
      r.check(label + ":unstable_frame_gap", uf.convergence_gap, 1e-8, 0.0, 0.0);
      r.check(label + ":unstable_frame_invariance", uf.invariance_residual, 1e-8, 0.0, 0.0);
      const auto params = AdaptedNormParams::from_exponents(spectra[label].distinct);
      const auto orbit = split_orbit(sys, sys.attractor_point(), 2 * params.max_terms + 40, 1, 80, opt.seed);
      ChartQualityOptions co;
      co.seed = opt.seed;
      auto q = chart_quality(sys, orbit, params, co);
      for (auto row : q.checks.rows) {
        row.statement = label + ":" + row.statement;
        r.rows.push_back(row);
      }
      r.constants.push_back({label + ":max_l_ratio", q.max_l_ratio});
    }
  }

  // 7. Unstable manifolds.
  {
    Timer t;
    BoundReport& r = section("unstable_manifolds");
    Rng rng(opt.seed);
    std::string detail;
    for (const auto& b : builtin_systems()) {
      auto sys = system_from_json(b.config);
      const auto params = AdaptedNormParams::from_exponents(spectra.count(b.label) ? spectra[b.label].distinct
                                                                                   : spectra["galerkin_linf"].distinct);
      const int index = params.max_terms + 50;
      const auto orbit = split_orbit(sys, sys.attractor_point(), 2 * params.max_terms + 100, 1, 80, opt.seed);
      double worst = 0.0;
      for (int i = 0; i < 20; ++i) {
        const double c = transform_contraction(sys, orbit, index - 20 + i, LeafGrid{}, rng);
        worst = std::max(worst, c);
        r.check(b.label + ":graph_transform_contraction", c, kBelowOne, 0.0, 0.0);
      }
      r.constants.push_back({b.label + ":max_contraction", worst});
      const auto man = local_unstable_manifold(sys, orbit, index);
      if (sys.second_derivative_bound == 0.0) {
        double g = 0.0;
        for (int j = 0; j < man.leaf().size(); ++j) g = std::max(g, man.leaf().value(j).cwiseAbs().maxCoeff());
        r.check(b.label + ":linear_leaf_is_flat", g, 1e-12, 0.0, 0.0);
        continue;
      }
      for (auto row : leaf_checks(sys, orbit, man, params).rows) {
        row.statement = b.label + ":" + row.statement;
        r.rows.push_back(row);
      }
      for (double a : {-0.45, -0.2, 0.1, 0.3, 0.45}) {
        const Vector s = shooting_point(sys, orbit, index, 40, a);
        r.check(b.label + ":shooting_oracle", (s - man.leaf().eval(Vector::Constant(1, a))).cwiseAbs().maxCoeff(),
                1e-4, 0.0, 0.0);
      }
      if (b.label == "solenoid_linf") {
        detail = "solenoid leaf Lip " + num(man.leaf().lipschitz(sys.space)) + ", max contraction " + num(worst) + "; ";
      }
    }
    finish({7, "unstable manifolds", r.all_pass(), detail + counts(r)}, t);
  }

  // 8. Distortion and 9. change of variables, both under l2 where J^u varies.
  {
    Timer t;
    BoundReport& r = section("distortion");
    std::string detail;
    for (const std::string label : {"solenoid_l2", "galerkin_l2"}) {
      auto sys = make(label);
      const int index = 150;
      const auto orbit = split_orbit(sys, sys.attractor_point(), index + 10, 1, 80, opt.seed);
      ManifoldOptions mo;
      mo.min_depth = 100;
      const auto man = local_unstable_manifold(sys, orbit, index, mo);
      ManifoldOptions fine = mo;
      fine.grid.nodes = 2 * mo.grid.nodes - 1;
      const auto ref = local_unstable_manifold(sys, orbit, index, fine);
      const auto d1 = distortion_table(sys, man, orbit);
      const auto d2 = distortion_table(sys, ref, orbit);
      r.check(label + ":distortion_rate_below_one", d1.rho, kBelowOne, 0.0, 0.0);
      // The tail-fit oracle is the solenoid's; elsewhere the increments follow
      // the orbit's Jacobian gradient and only their envelope is geometric.
      if (label == "solenoid_l2") {
        r.check(label + ":distortion_fit_r_squared", 0.99, d1.r_squared, 0.0, 0.0);
      } else {
        r.constants.push_back({label + ":r_squared", d1.r_squared});
      }
      r.check(label + ":lipschitz_refinement_change", std::abs(d2.lipschitz - d1.lipschitz) / d1.lipschitz, 0.1, 0.0,
              0.0);
      r.constants.push_back({label + ":rho", d1.rho});
      r.constants.push_back({label + ":lipschitz", d1.lipschitz});
      r.constants.push_back({label + ":lipschitz_refined", d2.lipschitz});
      if (label == "solenoid_l2") {
        detail = "solenoid rho " + num(d1.rho) + ", R^2 " + num(d1.r_squared) + ", Lip " + num(d1.lipschitz) +
                 " -> " + num(d2.lipschitz) + "; ";
      }
    }
    finish({8, "distortion decay", r.all_pass(), detail + counts(r)}, t);
  }
  {
    Timer t;
    BoundReport& r = section("change_of_variables");
    Rng rng(mix_seed(opt.seed, 9));
    double worst = 0.0;
    for (const std::string label : {"solenoid_l2", "galerkin_l2", "solenoid_linf"}) {
      auto sys = make(label);
      const auto orbit = split_orbit(sys, sys.attractor_point(), 160, 1, 80, opt.seed);
      const auto man = local_unstable_manifold(sys, orbit, 150);
      ManifoldOptions fine;
      fine.grid.nodes = 2 * fine.grid.nodes - 1;
      const auto ref = local_unstable_manifold(sys, orbit, 150, fine);
      const double lo = std::max(man.preimages[0].front()[0], ref.preimages[0].front()[0]);
      const double hi = std::min(man.preimages[0].back()[0], ref.preimages[0].back()[0]);
      for (int i = 0; i < 50; ++i) {
        double a = rng.uniform(lo, hi), b = rng.uniform(lo, hi);
        if (a > b) std::swap(a, b);
        const auto c = change_of_variables(sys, man, &ref, a, b);
        const double z = std::abs(c.image_volume - c.jacobian_integral);
        if (label == "solenoid_l2") worst = std::max(worst, z / c.sigma);
        r.check(label + ":image_volume_vs_jacobian_integral", z, 3.0 * c.sigma, 0.0, 0.0);
      }
    }
    finish({9, "change of variables", r.all_pass(), counts(r) + "; worst solenoid deviation " + num(worst) + " sigma"},
           t);
  }

  // 10. SRB density against the empirical conditional histogram.
  {
    Timer t;
    BoundReport& r = section("srb_density");
    auto sys = make("solenoid_l2");
    const auto orbit = split_orbit(sys, sys.attractor_point(), 160, 1, 80, opt.seed);
    ManifoldOptions mo;
    mo.min_depth = 100;
    const auto man = local_unstable_manifold(sys, orbit, 150, mo);
    const auto q = srb_density(sys, man.leaf(), distortion_table(sys, man, orbit));
    const auto prev = local_unstable_manifold(sys, orbit, 149, mo);
    const auto qp = srb_density(sys, prev.leaf(), distortion_table(sys, prev, orbit));
    r.append(density_transport_check(sys, man, q, prev, qp));
    const auto masses = predicted_bin_masses(sys, man.leaf(), q, 64);
    double total = 0.0;
    for (double m : masses) total += m;
    r.check("predicted_mass_sums_to_one", std::abs(total - 1.0), 1e-9, 0.0, 0.0);
    r.check("density_positive", -*std::min_element(q.q.begin(), q.q.end()), 0.0, 0.0, 0.0);
    EmpiricalOptions eo;
    eo.seed = opt.seed;
    eo.workers = opt.workers;
    std::vector<double> l1s;
    for (long n = std::max(100000L, sz.empirical_points / 100); n <= sz.empirical_points; n *= 10) {
      eo.n_orbit = n;
      const auto e = empirical_conditional(sys, man.leaf(), eo, &masses);
      l1s.push_back(*e.l1);
      r.constants.push_back({"l1_at_" + std::to_string(n), *e.l1});
      r.constants.push_back({"hits_at_" + std::to_string(n), static_cast<double>(e.hits)});
    }
    int inversions = 0;
    for (std::size_t i = 1; i < l1s.size(); ++i) inversions += l1s[i] > l1s[i - 1] ? 1 : 0;
    r.check("empirical_l1_trend_inversions", inversions, 1.0, 0.0, 0.0);
    r.check("empirical_l1_distance", l1s.back(), 0.05, 0.0, 0.0);

    // Uniform reference: Lebesgue measure of the cat map on the torus.
    {
      auto cat = make("cat_torus_linf");
      const auto corb = split_orbit(cat, cat.attractor_point(), 60, 1, 80, opt.seed);
      const auto cman = local_unstable_manifold(cat, corb, 50);
      EmpiricalOptions co = eo;
      co.n_orbit = sz.empirical_points;
      co.thickness = 0.05;
      const std::vector<double> flat(64, 1.0 / 64);
      const auto e = empirical_conditional(cat, cman.leaf(), co, &flat);
      const double mean = static_cast<double>(e.hits) / 64.0;
      double worst = 0.0;
      for (long c : e.counts) worst = std::max(worst, std::abs(static_cast<double>(c) - mean) / std::sqrt(mean));
      r.check("torus_histogram_flat", worst, 3.0, 0.0, 0.0).note =
          "max |count - mean| / sqrt(mean) over 64 bins, " + std::to_string(e.hits) + " hits";
    }
    CriterionResult c{10, "srb density vs empirical histogram", r.all_pass(),
                      "L1 " + num(l1s.back()) + " at " + std::to_string(sz.empirical_points) + " points, 64 bins; " +
                          counts(r)};
    c.time_limit = 600;
    finish(c, t);
  }

  // 11. Entropy formula.
  {
    Timer t;
    BoundReport& r = section("entropy_formula");
    std::string detail;
    bool pass = true;
    for (const std::string label :
         {"solenoid_linf", "solenoid_l2", "galerkin_linf", "cat_torus_linf", "cat_linear_l2", "diag_linear_linf"}) {
      auto sys = make(label);
      EntropyOptions eo;
      eo.seed = opt.seed;
      const auto rep = entropy_formula_report(sys, spectra[label], eo);
      for (auto row : rep.rows.rows) {
        row.statement = label + ":" + row.statement;
        r.rows.push_back(row);
      }
      r.constants.push_back({label + ":exponent_sum", rep.exponent_sum});
      r.constants.push_back({label + ":unstable_jacobian_average", rep.ju_average});
      pass = pass && rep.rows.all_pass();
      if (label == "solenoid_linf") {
        detail = "solenoid sum " + num(rep.exponent_sum) + ", log J^u average " + num(rep.ju_average) +
                 ", known " + num(*rep.known) + "; ";
      }
    }
    finish({11, "entropy formula", pass, detail + counts(r)}, t);
  }
  return out;
}

}  // namespace srbvol
