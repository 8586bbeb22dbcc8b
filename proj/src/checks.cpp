#include "srbvol/checks.hpp"

#include "srbvol/error.hpp"
#include "srbvol/parallel.hpp"

#include <cmath>
#include <map>

namespace srbvol {

std::vector<NormedSpace> default_battery_norms(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  Vector w(dim);
  for (int i = 0; i < dim; ++i) w[i] = 1.0 / (1.0 + 0.5 * i);
  return {NormedSpace::lp(dim, 1.0), NormedSpace::lp(dim, 2.0), NormedSpace::lp(dim, inf),
          NormedSpace::weighted_sup(w)};
}

Matrix random_frame_matrix(int dim, int k, Rng& rng) {
  for (;;) {
    Matrix m(dim, k);
    for (int j = 0; j < k; ++j) m.col(j) = rng.normal_vector(dim);
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s[k - 1] * 10.0 >= s[0]) return m;
  }
}

namespace {

std::vector<NormedSpace> norms_or_default(const std::vector<NormedSpace>& norms, int dim) {
  return norms.empty() ? default_battery_norms(dim) : norms;
}

struct LogRatio {
  double value = 0.0;
  double se = 0.0;
};

// log m(P[a]) - log m(P[b]) with common random numbers.
LogRatio log_volume_ratio(const Frame& a, const Frame& b, const MonteCarloOptions& mc) {
  if (a.k() == 1) {
    return {std::log(a.space().norm(a.vec(0))) - std::log(b.space().norm(b.vec(0))), 0.0};
  }
  const auto est = coupled_ball_volumes({&a, &b}, mc);
  return {std::log(est[1].value) - std::log(est[0].value),
          std::hypot(est[0].rel_error(), est[1].rel_error())};
}

MonteCarloOptions seeded(MonteCarloOptions mc, std::uint64_t seed) {
  mc.seed = seed;
  mc.workers = 1;
  return mc;
}

std::string k_note(int k) { return "k=" + std::to_string(k); }

Matrix unit_columns(Matrix m, const NormedSpace& space) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) /= space.norm(m.col(j));
  return m;
}

void merge_max(std::map<std::string, double>& acc, const BoundReport& r) {
  for (const auto& [name, v] : r.constants) {
    auto it = acc.find(name);
    if (it == acc.end() || v > it->second) acc[name] = v;
  }
}

}  // namespace

BoundReport verify_volume_axioms(const VolumeAxiomConfig& config) {
  const auto norms = norms_or_default(config.norms, config.dim);
  const int n = static_cast<int>(norms.size());
  auto run_case = [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    const NormedSpace& space = norms[static_cast<std::size_t>(i % n)];
    const bool scaling = (i / n) % 2 == 0;
    const int k = 1 + (i / (2 * n)) % config.max_k;
    Rng rng(mix_seed(config.seed, idx));
    const auto mc = seeded(config.mc, mix_seed(config.seed, 100000 + idx));
    const Frame v(space, random_frame_matrix(config.dim, k, rng));
    BoundReport r;
    if (scaling) {
      const double a = std::exp(rng.uniform(std::log(0.3), std::log(3.0)));
      const Frame av(space, a * v.basis());
      const auto lr = log_volume_ratio(av, v, mc);
      r.check("volume_scaling", std::abs(lr.value - k * std::log(a)), 3.0 * lr.se, 0.0)
          .note = k_note(k) + " " + space.describe();
    } else {
      const Matrix m = random_frame_matrix(k, k, rng);
      const Frame vm(space, v.basis() * m);
      const auto lr = log_volume_ratio(vm, v, mc);
      r.check("volume_basis_change", std::abs(lr.value - std::log(std::abs(m.determinant()))),
              3.0 * lr.se, 0.0)
          .note = k_note(k) + " " + space.describe();
    }
    return r;
  };
  auto parts = parallel_map<BoundReport>(static_cast<std::size_t>(config.cases), config.workers, run_case);
  BoundReport out;
  for (const auto& p : parts) out.append(p);
  return out;
}

BoundReport verify_john_sandwich(const JohnSandwichConfig& config) {
  std::vector<NormedSpace> norms = config.norms;
  if (norms.empty()) {
    norms = default_battery_norms(config.dim);
    Vector w(config.dim);
    for (int i = 0; i < config.dim; ++i) w[i] = 1.0 + 0.5 * i;
    norms.push_back(NormedSpace::weighted_l1(w));
    Matrix facets(2 * config.dim, config.dim);
    facets.setZero();
    for (int i = 0; i < config.dim; ++i) {
      facets(i, i) = 1.0;
      facets(config.dim + i, i) = 0.7;
      facets(config.dim + i, (i + 1) % config.dim) = 0.7;
    }
    norms.push_back(NormedSpace::polytope(facets));
  }
  BoundReport out;
  double worst_raw = 0.0;
  std::uint64_t case_id = 0;
  for (const auto& space : norms) {
    for (int k = 1; k <= std::min(config.max_k, config.dim); ++k) {
      Rng rng(mix_seed(config.seed, case_id++));
      const Frame frame(space, random_frame_matrix(config.dim, k, rng));
      const auto model = john_model(frame, -1, config.eps_mvee);
      double up = 0.0, down = 0.0;
      for (int s = 0; s < config.vectors; ++s) {
        const Vector c = rng.normal_vector(k);
        const double g = model.gram_norm(c);
        const double b = frame.coord_norm(c);
        up = std::max(up, b / g);
        down = std::max(down, g / b);
      }
      worst_raw = std::max(worst_raw, down);
      const double bound = (1.0 + config.eps_mvee) * std::sqrt(static_cast<double>(k));
      const std::string note = k_note(k) + " " + space.describe();
      out.check("john_norm_over_gram", up, bound, 0.0).note = note;
      out.check("john_gram_over_norm", down, bound, 0.0).note = note;
    }
  }
  out.constants.emplace_back("john_raw_max_gram_over_norm", worst_raw);
  return out;
}

BoundReport verify_geometry_invariants(const GeometryBatteryConfig& config) {
  const auto norms = norms_or_default(config.norms, config.dim);
  const int n = static_cast<int>(norms.size());
  const double tol = config.geo.rel_tol;
  auto run_case = [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    const NormedSpace& space = norms[static_cast<std::size_t>(i % n)];
    const int k = 1 + (i / n) % std::min(2, config.dim - 1);
    Rng rng(mix_seed(config.seed, idx));
    BoundReport r;
    const Matrix b = random_frame_matrix(config.dim, k, rng);
    const double t = rng.uniform(0.01, 0.3);
    const Frame e(space, b);
    const Frame e2(space, b + t * random_frame_matrix(config.dim, k, rng));
    const auto gd = gap_distances(e, e2, config.geo);
    const std::string note = k_note(k) + " " + space.describe();
    r.check("aperture_below_hausdorff", gd.delta_a, gd.d_h, tol).note = note;
    r.check("hausdorff_below_twice_aperture", gd.d_h, 2.0 * gd.delta_a, tol).note = note;
    const Matrix all = random_frame_matrix(config.dim, config.dim, rng);
    const Frame ef(space, all.leftCols(k));
    const Frame ff(space, all.rightCols(config.dim - k));
    const auto split = projection_and_angle(ef, ff, true, config.geo);
    auto sr = check_splitting(split, config.geo);
    for (auto& row : sr.rows) row.note = note;
    r.append(sr);
    return r;
  };
  auto parts = parallel_map<BoundReport>(static_cast<std::size_t>(config.pairs), config.workers, run_case);
  BoundReport out;
  for (const auto& p : parts) out.append(p);
  return out;
}

namespace {

enum class Sec2Kind { pgram, svd, split, volume_reg, det_reg, perturbed };

struct Sec2Case {
  Sec2Kind kind;
  int norm_index;
  int index;  // running index within the kind
  std::uint64_t seed;
};

BoundReport run_pgram(const NormedSpace& space, int k, const SubspaceBoundsConfig& cfg, Rng& rng,
                      const MonteCarloOptions& mc) {
  BoundReport r;
  const Frame v(space, random_frame_matrix(cfg.dim, k, rng));
  const auto m = induced_volume_parallelepiped(v, mc);
  double prod = std::pow(static_cast<double>(k), 0.5 * k);
  for (int i = 0; i < k; ++i) prod *= space.norm(v.vec(i));
  r.check_log("parallelepiped_volume_bound", m.value, prod, 3.0 * m.rel_error()).note = k_note(k);
  r.constants.emplace_back("parallelepiped_bound_ratio", m.value / prod);
  return r;
}

BoundReport run_svd(const NormedSpace& space, int k, const SubspaceBoundsConfig& cfg, Rng& rng,
                    const MonteCarloOptions& mc) {
  BoundReport r;
  const Matrix a = random_frame_matrix(cfg.dim, cfg.dim, rng);
  const Frame v(space, random_frame_matrix(cfg.dim, k, rng));
  const Frame w(space, a * v.basis());
  const double eps = mc.eps_mvee;
  auto mc_w = mc;
  mc_w.seed = mix_seed(mc.seed, 1);
  auto mc_d = mc;
  mc_d.seed = mix_seed(mc.seed, 2);
  const auto bv = unit_ball_coord_volume(v, mc);
  const auto bw = unit_ball_coord_volume(w, mc_w);
  const auto mv = volume_matched_model(john_model(v, -1, eps), bv.value);
  const auto mw = volume_matched_model(john_model(w, -1, eps), bw.value);
  const Matrix lv = Eigen::LLT<Matrix>(mv.gram).matrixL();
  const Matrix lw = Eigen::LLT<Matrix>(mw.gram).matrixL();
  const Matrix lv_inv_t = lv.transpose().inverse();
  // Matrix of A from gram-orthonormal coordinates on V to those on AV.
  const Matrix m = lw.transpose() * lv_inv_t;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix ortho = v.basis() * lv_inv_t;
  const Matrix singular = ortho * svd.matrixV();
  const auto det = det_restricted(LinearMap::dense(a), v, mc_d);
  double prod_ortho = 1.0, prod_svd = 1.0;
  for (int i = 0; i < k; ++i) {
    prod_ortho *= space.norm(a * ortho.col(i));
    prod_svd *= space.norm(a * singular.col(i));
  }
  const double kk = std::pow(static_cast<double>(k), 0.5 * k);
  const double sigma = std::sqrt(det.std_error_log * det.std_error_log +
                                 bv.rel_error() * bv.rel_error() + bw.rel_error() * bw.rel_error());
  const double mvee_slack = 2.0 * k * std::log1p(eps);
  r.check_log("svd_det_upper_orthonormal", det.value, kk * prod_ortho, 3.0 * sigma).note = k_note(k);
  r.check_log("svd_det_lower", prod_svd / kk, det.value, 3.0 * sigma + mvee_slack).note = k_note(k);
  r.check_log("svd_det_upper", det.value, kk * prod_svd, 3.0 * sigma + mvee_slack).note = k_note(k);
  if (k > 1) {
    r.constants.emplace_back("svd_log_gap_fraction",
                             std::abs(std::log(det.value / prod_svd)) / std::log(kk));
  }
  return r;
}

BoundReport run_split(const NormedSpace& space, int k, int q, const SubspaceBoundsConfig& cfg, Rng& rng,
                      const MonteCarloOptions& mc) {
  BoundReport r;
  const Matrix b = random_frame_matrix(cfg.dim, k, rng);
  const Matrix p = random_frame_matrix(k, k, rng);
  const Matrix a = random_frame_matrix(cfg.dim, cfg.dim, rng);
  const Frame vf(space, b);
  const Frame e(space, b * p.leftCols(q));
  const Frame f(space, b * p.rightCols(k - q));
  const Frame ae(space, a * e.basis());
  const Frame af(space, a * f.basis());
  const LinearMap am = LinearMap::dense(a);
  auto mc2 = mc;
  mc2.seed = mix_seed(mc.seed, 1);
  auto mc3 = mc;
  mc3.seed = mix_seed(mc.seed, 2);
  const auto dv = det_restricted(am, vf, mc);
  const auto de = det_restricted(am, e, mc2);
  const auto df = det_restricted(am, f, mc3);
  const double log_ratio = dv.log_value - de.log_value - df.log_value;
  const double ratio = std::exp(log_ratio);
  const double sigma = std::sqrt(dv.std_error_log * dv.std_error_log +
                                 de.std_error_log * de.std_error_log +
                                 df.std_error_log * df.std_error_log);
  const double alpha = angle(e, f, cfg.geo);
  const double alpha_img = angle(ae, af, cfg.geo);
  const double slack = 3.0 * sigma + cfg.geo.rel_tol;
  const std::string note = k_note(k) + " q=" + std::to_string(q);
  r.check_log("split_det_lower", std::pow(alpha_img, q) / cfg.c_k, ratio, slack).note = note;
  r.check_log("split_det_upper", ratio, cfg.c_k / std::pow(alpha, q), slack).note = note;
  r.constants.emplace_back("split_det_constant",
                           std::max(ratio * std::pow(alpha, q), std::pow(alpha_img, q) / ratio));
  return r;
}

BoundReport run_volume_reg(const NormedSpace& space, int k, const SubspaceBoundsConfig& cfg, Rng& rng,
                           const MonteCarloOptions& mc) {
  BoundReport r;
  const Matrix v = unit_columns(random_frame_matrix(cfg.dim, k, rng), space);
  Matrix w = v;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double t = cfg.perturbation * rng.uniform(0.1, 1.0);
    Vector g = rng.normal_vector(cfg.dim);
    w.col(i) = v.col(i) + t * g / space.norm(g);
    w.col(i) /= space.norm(w.col(i));
    sum += space.norm(v.col(i) - w.col(i));
  }
  const Frame fv(space, v), fw(space, w);
  const double nbar = cfg.nbar_per_k * k;
  const double nv = orthogonality_defect(fv), nw = orthogonality_defect(fw);
  if (std::max(nv, nw) > nbar) {
    r.add_vacuous("volume_lipschitz", "orthogonality defect above cap");
    return r;
  }
  const auto lr = log_volume_ratio(fv, fw, mc);
  r.check("volume_lipschitz", std::abs(lr.value), cfg.volume_lipschitz * sum, 0.0, 3.0 * lr.se + 1e-12)
      .note = k_note(k);
  r.constants.emplace_back("volume_lipschitz_fit", std::max(0.0, std::abs(lr.value) - 3.0 * lr.se) / sum);
  return r;
}

BoundReport run_det_reg(const NormedSpace& space, int k, const SubspaceBoundsConfig& cfg, Rng& rng,
                        const MonteCarloOptions& mc) {
  BoundReport r;
  const int d = cfg.dim;
  Matrix noise = rng.normal_vector(d * d).reshaped(d, d);
  noise /= space.operator_norm(noise);
  const Matrix a1 = Matrix::Identity(d, d) + 0.1 * noise;
  const Matrix b1 = random_frame_matrix(d, k, rng);
  const Frame e1(space, b1);
  const double m_bound =
      1.01 * std::max(space.operator_norm(a1), 1.0 / restricted_min(a1, e1, cfg.geo));
  const double delta2 = 1.0 / (cfg.c_k * std::pow(m_bound, 10.0 * k));
  const double l2 = 1.0 / delta2;

  Matrix da = rng.normal_vector(d * d).reshaped(d, d);
  da *= rng.uniform(0.1, 0.5) * delta2 / space.operator_norm(da);
  const Matrix a2 = a1 + da;
  const Matrix db = random_frame_matrix(d, k, rng);
  double t = 0.3 * delta2;
  Frame e2(space, b1 + t * db);
  double dh = hausdorff_distance(e1, e2, cfg.geo);
  for (int tries = 0; tries < 8 && dh > 0.5 * delta2; ++tries) {
    t *= 0.25 * delta2 / dh;
    e2 = Frame(space, b1 + t * db);
    dh = hausdorff_distance(e1, e2, cfg.geo);
  }
  const double m2 = std::max(space.operator_norm(a2), 1.0 / restricted_min(a2, e2, cfg.geo));
  if (dh > delta2 || m2 > m_bound) {
    r.add_vacuous("det_lipschitz", "perturbation outside the admissible radius");
    return r;
  }
  const auto d1 = det_restricted(LinearMap::dense(a1), e1, mc);
  const auto d2 = det_restricted(LinearMap::dense(a2), e2, mc);
  const double lhs = std::abs(d1.log_value - d2.log_value);
  const double dist = space.operator_norm(da) + dh;
  const double se = std::hypot(d1.std_error_log, d2.std_error_log);
  r.check("det_lipschitz", lhs, l2 * dist, 0.0, 3.0 * se + 1e-12).note = k_note(k);
  if (k == 1) {
    r.constants.emplace_back("det_lipschitz_fit_k1", lhs / dist);
    r.constants.emplace_back("det_lipschitz_fit_over_bound_k1", lhs / (l2 * dist));
  }
  return r;
}

BoundReport run_perturbed(const NormedSpace& space, int k, const SubspaceBoundsConfig& cfg, Rng& rng) {
  const Matrix b = random_frame_matrix(cfg.dim, k, rng);
  const Frame e(space, b);
  const auto comp = complement(e, cfg.geo);
  const double sk = std::sqrt(static_cast<double>(k));
  const double t = rng.uniform(0.02, 0.3) / (2.0 * sk);
  Matrix g = random_frame_matrix(cfg.dim, k, rng);
  for (int i = 0; i < k; ++i) g.col(i) *= space.norm(b.col(i)) / space.norm(g.col(i));
  const Frame e2(space, b + t * g);
  auto r = check_perturbed_splitting(e, e2, comp.f, cfg.geo);
  for (auto& row : r.rows) row.note = row.note.empty() ? k_note(k) : row.note + "; " + k_note(k);
  r.constants.emplace_back("complement_projection_norm_over_sqrtk", comp.proj_norm / sk);
  return r;
}

}  // namespace

BoundReport verify_subspace_bounds(const SubspaceBoundsConfig& config) {
  const auto norms = norms_or_default(config.norms, config.dim);
  const int max_k = std::min(config.max_k, config.dim);
  if (max_k < 2 || config.dim < 3) throw InputError("verify_subspace_bounds: needs dim >= 3 and max_k >= 2");
  static const std::pair<Sec2Kind, int> mix[] = {{Sec2Kind::pgram, 25},     {Sec2Kind::svd, 10},
                                                 {Sec2Kind::split, 10},     {Sec2Kind::volume_reg, 20},
                                                 {Sec2Kind::det_reg, 10},   {Sec2Kind::perturbed, 5}};
  BoundReport out;
  std::map<std::string, double> fitted;
  std::map<Sec2Kind, int> counters;
  std::uint64_t case_id = 0;
  for (int block = 0; static_cast<int>(out.evaluated()) < config.min_rows; ++block) {
    if (block > 64) break;
    std::vector<Sec2Case> cases;
    for (const auto& [kind, count] : mix) {
      for (int c = 0; c < count; ++c) {
        cases.push_back({kind, block % static_cast<int>(norms.size()), counters[kind]++,
                         mix_seed(config.seed, case_id++)});
      }
    }
    auto run = [&](std::size_t idx) {
      const Sec2Case& cs = cases[idx];
      const NormedSpace& space = norms[static_cast<std::size_t>(cs.norm_index)];
      Rng rng(cs.seed);
      const auto mc = seeded(config.mc, mix_seed(cs.seed, 7));
      BoundReport r;
      switch (cs.kind) {
        case Sec2Kind::pgram: r = run_pgram(space, 1 + cs.index % max_k, config, rng, mc); break;
        case Sec2Kind::svd: r = run_svd(space, 1 + cs.index % max_k, config, rng, mc); break;
        case Sec2Kind::split: {
          const int k = 2 + cs.index % (max_k - 1);
          r = run_split(space, k, 1 + (cs.index / (max_k - 1)) % (k - 1), config, rng, mc);
          break;
        }
        case Sec2Kind::volume_reg: r = run_volume_reg(space, 1 + cs.index % max_k, config, rng, mc); break;
        case Sec2Kind::det_reg: r = run_det_reg(space, 1 + cs.index % max_k, config, rng, mc); break;
        case Sec2Kind::perturbed:
          r = run_perturbed(space, 1 + cs.index % std::min(2, config.dim - 1), config, rng);
          break;
      }
      for (auto& row : r.rows) row.note = row.note + " " + space.describe();
      return r;
    };
    auto parts = parallel_map<BoundReport>(cases.size(), config.workers, run);
    for (const auto& p : parts) {
      merge_max(fitted, p);
      BoundReport rows_only = p;
      rows_only.constants.clear();
      out.append(rows_only);
    }
  }
  for (const auto& [name, v] : fitted) out.constants.emplace_back(name, v);
  out.constants.emplace_back("c_k_used", config.c_k);
  out.constants.emplace_back("volume_lipschitz_used", config.volume_lipschitz);
  return out;
}

}  // namespace srbvol
