#include "srbvol/srb.hpp"

#include "srbvol/error.hpp"
#include "srbvol/format.hpp"
#include "srbvol/parallel.hpp"
#include "srbvol/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace srbvol {

namespace {

// Cubic Hermite through uniform samples with centred-difference slopes.
double hermite(const std::vector<double>& v, double radius, double a) {
  const int n = static_cast<int>(v.size());
  const double h = 2.0 * radius / (n - 1);
  const double sf = (a + radius) / h;
  const int c = std::clamp(static_cast<int>(std::floor(sf)), 0, n - 2);
  const double s = sf - c;
  auto slope = [&](int i) {
    if (i == 0) return -1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2];
    if (i == n - 1) return 1.5 * v[static_cast<std::size_t>(n - 1)] - 2.0 * v[static_cast<std::size_t>(n - 2)] +
                           0.5 * v[static_cast<std::size_t>(n - 3)];
    return 0.5 * (v[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(i - 1)]);
  };
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * v[static_cast<std::size_t>(c)] + (s3 - 2 * s2 + s) * slope(c) +
         (-2 * s3 + 3 * s2) * v[static_cast<std::size_t>(c + 1)] + (s3 - s2) * slope(c + 1);
}

}  // namespace

double SRBDensityProfile::density(double a) const {
  return std::exp(hermite(log_delta, radius, a)) / normalization;
}

json SRBDensityProfile::to_json() const {
  json u = json::array(), qq = json::array(), qe = json::array(), ld = json::array();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    u.push_back(json_number(nodes[i]));
    qq.push_back(json_number(q[i]));
    qe.push_back(json_number(q_error[i]));
    ld.push_back(json_number(log_delta[i]));
  }
  return {{"u", u},
          {"q", qq},
          {"q_error", qe},
          {"log_delta", ld},
          {"normalization", json_number(normalization)},
          {"normalization_error", json_number(normalization_error)}};
}

SRBDensityProfile srb_density(const SmoothSystem& system, const LeafGraph& leaf, const DistortionTable& table,
                              int gauss_points) {
  if (leaf.m_u() != 1) throw UnsupportedDimensionError("srb_density: needs m_u = 1");
  if (static_cast<int>(table.log_delta.size()) != leaf.size()) {
    throw InputError("srb_density: distortion table does not belong to this leaf");
  }
  SRBDensityProfile p;
  p.radius = leaf.grid().radius;
  p.log_delta = table.log_delta;
  for (int j = 0; j < leaf.size(); ++j) p.nodes.push_back(leaf.node(j)[0]);
  const auto norm = leaf_integral(
      system, leaf, -p.radius, p.radius, [&](double a) { return std::exp(hermite(p.log_delta, p.radius, a)); },
      gauss_points);
  p.normalization = norm.value;
  const double worst_tail = table.tail_bound.empty()
                                ? 0.0
                                : *std::max_element(table.tail_bound.begin(), table.tail_bound.end());
  p.normalization_error = norm.std_error + worst_tail * norm.value;
  const double rel_norm = p.normalization_error / p.normalization;
  for (int j = 0; j < leaf.size(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double q = std::exp(p.log_delta[ju]) / p.normalization;
    p.q.push_back(q);
    p.q_error.push_back(q * (table.tail_bound[ju] + rel_norm));
  }
  return p;
}

std::vector<double> predicted_bin_masses(const SmoothSystem& system, const LeafGraph& leaf,
                                         const SRBDensityProfile& profile, int bins, int gauss_points) {
  if (bins < 1) throw InputError("predicted_bin_masses: bins must be positive");
  std::vector<double> out;
  const double r = profile.radius, w = 2.0 * r / bins;
  for (int k = 0; k < bins; ++k) {
    const double lo = -r + k * w, hi = k + 1 == bins ? r : -r + (k + 1) * w;
    out.push_back(
        leaf_integral(system, leaf, lo, hi, [&](double a) { return profile.density(a); }, gauss_points).value);
  }
  return out;
}

json EmpiricalConditional::to_json() const {
  json e = json::array(), c = json::array(), h = json::array(), r = json::array(), nz = json::array();
  for (double v : edges) e.push_back(json_number(v));
  for (long v : counts) c.push_back(v);
  for (double v : histogram) h.push_back(json_number(v));
  for (double v : reference) r.push_back(json_number(v));
  for (double v : noise) nz.push_back(json_number(v));
  json j = {{"edges", e},   {"counts", c},           {"histogram", h},
            {"reference", r}, {"noise", nz},         {"n_points", n_points},
            {"hits", hits},   {"thickness", json_number(thickness)}};
  j["l1"] = l1 ? json_number(*l1) : json(nullptr);
  return j;
}

EmpiricalConditional empirical_conditional(const SmoothSystem& system, const LeafGraph& leaf,
                                           const EmpiricalOptions& o, const std::vector<double>* reference) {
  if (leaf.m_u() != 1) throw UnsupportedDimensionError("empirical_conditional: needs m_u = 1");
  if (o.bins < 1 || o.orbits < 1 || o.n_orbit < o.orbits) throw InputError("empirical_conditional: invalid sizes");
  if (!(o.thickness > 0)) throw InputError("empirical_conditional: thickness must be positive");
  if (reference != nullptr && static_cast<int>(reference->size()) != o.bins) {
    throw InputError("empirical_conditional: reference has the wrong number of bins");
  }
  const ChartFrame& chart = leaf.chart();
  const double r = leaf.grid().radius;
  const double width = 2.0 * r / o.bins;
  const Vector start = system.attractor_point();

  auto run = [&](std::size_t orbit) {
    std::vector<long> counts(static_cast<std::size_t>(o.bins), 0);
    const long share = o.n_orbit / o.orbits + (static_cast<long>(orbit) < o.n_orbit % o.orbits ? 1 : 0);
    Rng rng(mix_seed(o.seed, orbit));
    Vector x = system.translate(start, 1e-3 * rng.normal_vector(system.dim()));
    x = system.iterate(x, o.burn_in);
    for (long t = 0; t < share; ++t) {
      x = system.map(x);
      if (!x.allFinite()) throw InputError("empirical_conditional: orbit diverged; no bounded attractor");
      const Vector c = chart.inverse * system.displacement(chart.base, x);
      const double a = c[0];
      if (!(std::abs(a) < r)) continue;
      const Vector b = c.tail(chart.m_s());
      if (system.space.norm(chart.stable * (b - leaf.eval(c.head(1)))) > o.thickness) continue;
      const int k = std::min(o.bins - 1, static_cast<int>((a + r) / width));
      ++counts[static_cast<std::size_t>(k)];
    }
    return counts;
  };
  const auto parts = parallel_map<std::vector<long>>(static_cast<std::size_t>(o.orbits), o.workers, run);

  EmpiricalConditional out;
  out.n_points = o.n_orbit;
  out.thickness = o.thickness;
  out.counts.assign(static_cast<std::size_t>(o.bins), 0);
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < p.size(); ++k) out.counts[k] += p[k];
  }
  out.hits = std::accumulate(out.counts.begin(), out.counts.end(), 0L);
  if (out.hits < o.min_hits) {
    std::ostringstream os;
    os << "empirical_conditional: only " << out.hits << " orbit points fell in the window (need " << o.min_hits
       << "); use a thicker window or a longer orbit";
    throw InsufficientDataError(os.str());
  }
  for (int k = 0; k <= o.bins; ++k) out.edges.push_back(-r + k * width);
  for (long c : out.counts) out.histogram.push_back(static_cast<double>(c) / static_cast<double>(out.hits));
  if (reference != nullptr) {
    out.reference = *reference;
    double l1 = 0.0;
    for (std::size_t k = 0; k < out.histogram.size(); ++k) {
      l1 += std::abs(out.histogram[k] - out.reference[k]);
      out.noise.push_back(3.0 * std::sqrt(out.reference[k] / static_cast<double>(out.hits)));
    }
    out.l1 = l1;
  }
  return out;
}

BoundReport density_transport_check(const SmoothSystem& system, const UnstableManifold& current,
                                    const SRBDensityProfile& current_q, const UnstableManifold& previous,
                                    const SRBDensityProfile& previous_q, int stride) {
  if (current.depth < 1 || previous.index != current.index - 1) {
    throw InputError("density_transport_check: manifolds must sit at consecutive orbit indices");
  }
  if (stride < 1) throw InputError("density_transport_check: stride must be positive");
  BoundReport r;
  const LeafGraph& leaf = current.leaf();
  const LeafGraph& prev = previous.leaf();
  const int c = leaf.center();
  const auto& pre = current.preimages[0];
  auto rel = [](const SRBDensityProfile& p, int j) {
    return p.q_error[static_cast<std::size_t>(j)] / p.q[static_cast<std::size_t>(j)];
  };
  const double y_pre = pre[static_cast<std::size_t>(c)][0];
  for (int j = 0; j < leaf.size(); j += stride) {
    if (j == c) continue;
    const double z_pre = pre[static_cast<std::size_t>(j)][0];
    if (!prev.contains(Vector::Constant(1, z_pre), 0.0)) continue;
    const double lhs = std::log(previous_q.density(z_pre)) - std::log(previous_q.density(y_pre));
    const double rhs = std::log(current_q.q[static_cast<std::size_t>(j)]) -
                       std::log(current_q.q[static_cast<std::size_t>(c)]) +
                       log_unstable_jacobian(system, prev, z_pre) - log_unstable_jacobian(system, prev, y_pre);
    // Tail bounds of both tables plus interpolation of q_{-1} between nodes.
    const double tol = rel(current_q, j) + rel(current_q, c) + 2.0 * *std::max_element(previous_q.q_error.begin(),
                                                                                         previous_q.q_error.end()) /
                                                                   *std::min_element(previous_q.q.begin(),
                                                                                     previous_q.q.end()) +
                       1e-9;
    r.check("density_transport_ratio", std::abs(lhs - rhs), tol, 0.0, 0.0);
  }
  return r;
}

json EntropyReport::to_json() const {
  json j = {{"m_u", m_u},
            {"exponent_sum", json_number(exponent_sum)},
            {"exponent_sigma", json_number(exponent_sigma)},
            {"ju_average", json_number(ju_average)},
            {"ju_sigma", json_number(ju_sigma)},
            {"srb", srb},
            {"rows", rows.to_json()},
            {"notes", notes}};
  j["known_entropy"] = known ? json_number(*known) : json(nullptr);
  return j;
}

EntropyReport entropy_formula_report(const SmoothSystem& system, const LyapunovReport& spectrum,
                                     const EntropyOptions& o) {
  EntropyReport rep;
  rep.m_u = spectrum.unstable_dim;
  if (system.known) {
    rep.known = system.known->entropy;
    rep.srb = system.known->srb;
  }
  if (rep.m_u > 0) {
    rep.exponent_sum = spectrum.sums[static_cast<std::size_t>(rep.m_u - 1)];
    rep.exponent_sigma = spectrum.sums_sigma[static_cast<std::size_t>(rep.m_u - 1)];
  }

  if (rep.m_u > 0) {
    const int n = o.orbit_length;
    const OrbitSplitting orbit = split_orbit(system, system.attractor_point(), n + 1, rep.m_u, 80, o.seed);
    std::vector<double> per_step(static_cast<std::size_t>(n));
    double correction = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const Matrix& u = orbit.unstable[iu];
      const Matrix img = orbit.history.derivatives[iu].apply(u);
      if (rep.m_u == 1) {
        per_step[iu] = std::log(system.space.norm(img.col(0)) / system.space.norm(u.col(0)));
      } else {
        per_step[iu] = std::log(std::abs((orbit.unstable[iu + 1].transpose() * img).determinant()));
      }
    }
    if (rep.m_u > 1) {
      MonteCarloOptions mc;
      mc.seed = o.seed;
      const auto v0 = induced_volume_parallelepiped(Frame(system.space, orbit.unstable.front()), mc);
      const auto vn = induced_volume_parallelepiped(Frame(system.space, orbit.unstable[static_cast<std::size_t>(n)]), mc);
      correction = std::log(vn.value) - std::log(v0.value);
      rep.ju_sigma += std::hypot(vn.rel_error(), v0.rel_error()) / n;
    }
    const double total = std::accumulate(per_step.begin(), per_step.end(), 0.0) + correction;
    rep.ju_average = total / n;
    const int nb = std::max(2, std::min(o.batches, n));
    std::vector<double> means(static_cast<std::size_t>(nb), 0.0);
    for (int i = 0; i < n; ++i) means[static_cast<std::size_t>(static_cast<long>(i) * nb / n)] += per_step[static_cast<std::size_t>(i)];
    for (int b = 0; b < nb; ++b) {
      const long lo = static_cast<long>(b) * n / nb, hi = static_cast<long>(b + 1) * n / nb;
      means[static_cast<std::size_t>(b)] /= static_cast<double>(hi - lo);
    }
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / nb;
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    rep.ju_sigma += std::sqrt(var / (nb - 1) / nb);
  }

  if (rep.known) {
    if (rep.srb) {
      rep.rows.check("exponent_sum_matches_entropy", std::abs(rep.exponent_sum - *rep.known), o.known_tol, 0.0, 0.0);
      rep.rows.check("unstable_jacobian_average_matches_entropy", std::abs(rep.ju_average - *rep.known), o.known_tol,
                     0.0, 0.0);
    } else {
      const std::string why =
          "invariant measure is not SRB (Dirac measure at a hyperbolic fixed point); the entropy formula is not "
          "expected to hold";
      rep.rows.add_vacuous("exponent_sum_matches_entropy", why);
      rep.rows.add_vacuous("unstable_jacobian_average_matches_entropy", why);
      std::ostringstream os;
      os << "contrast case: positive exponent sum " << rep.exponent_sum << " differs from the entropy " << *rep.known
         << " of the Dirac measure";
      rep.notes.push_back(os.str());
    }
  } else {
    rep.notes.push_back("no known entropy for this system; only the two computed routes are compared");
  }
  rep.rows.check("entropy_routes_agree", std::abs(rep.exponent_sum - rep.ju_average), o.route_tol, 0.0, 0.0);
  return rep;
}

}  // namespace srbvol
