#include "srbvol/manifold.hpp"

#include "srbvol/error.hpp"
#include "srbvol/format.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace srbvol {

namespace {

struct Rule {
  std::vector<double> x, w;  // on [-1, 1]
};

template <unsigned N>
Rule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  Rule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(w[i]);
      continue;
    }
    r.x.push_back(a[i]);
    r.w.push_back(w[i]);
    r.x.push_back(-a[i]);
    r.w.push_back(w[i]);
  }
  return r;
}

const Rule& gauss_rule(int n) {
  static const Rule r2 = make_rule<2>(), r4 = make_rule<4>(), r8 = make_rule<8>(), r16 = make_rule<16>();
  switch (n) {
    case 2: return r2;
    case 4: return r4;
    case 8: return r8;
    case 16: return r16;
    default: throw InputError("gauss_points must be one of 2, 4, 8, 16");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Charts

ChartFrame ChartFrame::make(Vector base, Matrix unstable, Matrix stable) {
  ChartFrame c;
  c.base = std::move(base);
  c.unstable = std::move(unstable);
  c.stable = std::move(stable);
  const auto d = c.base.size();
  if (c.unstable.rows() != d || c.stable.rows() != d || c.unstable.cols() + c.stable.cols() != d) {
    throw InputError("chart: unstable and stable frames must split the ambient space");
  }
  Matrix m(d, d);
  m << c.unstable, c.stable;
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw SplittingError("chart: unstable and stable frames intersect");
  c.inverse = lu.inverse();
  return c;
}

std::pair<Vector, Vector> ChartFrame::coords(const Vector& displacement) const {
  const Vector c = inverse * displacement;
  return {c.head(m_u()), c.tail(m_s())};
}

ChartFrame chart_at(const OrbitSplitting& orbit, int index) {
  if (index < 0 || index >= orbit.size()) throw InputError("chart_at: index outside the orbit");
  const auto i = static_cast<std::size_t>(index);
  return ChartFrame::make(orbit.history.points[i], orbit.unstable[i], orbit.stable[i]);
}

// ---------------------------------------------------------------------------
// Leaf graphs

LeafGraph::LeafGraph(ChartFrame chart, LeafGrid grid) : chart_(std::move(chart)), grid_(grid) {
  if (m_u() < 1 || m_u() > 2) throw UnsupportedDimensionError("leaf graphs need 1 <= m_u <= 2");
  if (grid_.nodes < 5 || grid_.nodes % 2 == 0) throw InputError("leaf grid needs an odd node count >= 5");
  if (!(grid_.radius > 0)) throw InputError("leaf grid radius must be positive");
  const int total = m_u() == 1 ? grid_.nodes : grid_.nodes * grid_.nodes;
  values_.assign(static_cast<std::size_t>(total), Vector::Zero(chart_.m_s()));
}

int LeafGraph::center() const {
  const int c = grid_.nodes / 2;
  return m_u() == 1 ? c : c + grid_.nodes * c;
}

Vector LeafGraph::node(int j) const {
  const double h = spacing();
  Vector a(m_u());
  a[0] = -grid_.radius + (j % grid_.nodes) * h;
  if (m_u() == 2) a[1] = -grid_.radius + (j / grid_.nodes) * h;
  return a;
}

bool LeafGraph::contains(const Vector& a, double slack) const {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) > grid_.radius * (1.0 + slack)) return false;
  }
  return true;
}

namespace {

// h * slope at node i as a stencil over node indices along one axis.
void slope_stencil(int i, int n, std::vector<std::pair<int, double>>& out) {
  out.clear();
  if (i == 0) {
    out = {{0, -1.5}, {1, 2.0}, {2, -0.5}};
  } else if (i == n - 1) {
    out = {{n - 1, 1.5}, {n - 2, -2.0}, {n - 3, 0.5}};
  } else {
    out = {{i + 1, 0.5}, {i - 1, -0.5}};
  }
}

}  // namespace

LeafGraph::Weights LeafGraph::axis_weights(double a) const {
  const int n = grid_.nodes;
  const double h = spacing();
  const double sf = (a + grid_.radius) / h;
  const int c = std::clamp(static_cast<int>(std::floor(sf)), 0, n - 2);
  const double s = sf - c;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  std::map<int, std::pair<double, double>> acc;
  acc[c].first += h00;
  acc[c].second += d00 / h;
  acc[c + 1].first += h01;
  acc[c + 1].second += d01 / h;
  std::vector<std::pair<int, double>> st;
  slope_stencil(c, n, st);
  for (auto [i, k] : st) {
    acc[i].first += h10 * k;
    acc[i].second += d10 * k / h;
  }
  slope_stencil(c + 1, n, st);
  for (auto [i, k] : st) {
    acc[i].first += h11 * k;
    acc[i].second += d11 * k / h;
  }
  Weights w;
  for (const auto& [i, v] : acc) {
    w.idx.push_back(i);
    w.w.push_back(v.first);
    w.dw.push_back(v.second);
  }
  return w;
}

Vector LeafGraph::eval(const Vector& a) const {
  Vector out = Vector::Zero(chart_.m_s());
  const Weights w0 = axis_weights(a[0]);
  if (m_u() == 1) {
    for (std::size_t k = 0; k < w0.idx.size(); ++k) out += w0.w[k] * value(w0.idx[k]);
    return out;
  }
  const Weights w1 = axis_weights(a[1]);
  for (std::size_t l = 0; l < w1.idx.size(); ++l) {
    for (std::size_t k = 0; k < w0.idx.size(); ++k) {
      out += w0.w[k] * w1.w[l] * value(w0.idx[k] + grid_.nodes * w1.idx[l]);
    }
  }
  return out;
}

Matrix LeafGraph::eval_derivative(const Vector& a) const {
  Matrix out = Matrix::Zero(chart_.m_s(), m_u());
  const Weights w0 = axis_weights(a[0]);
  if (m_u() == 1) {
    for (std::size_t k = 0; k < w0.idx.size(); ++k) out.col(0) += w0.dw[k] * value(w0.idx[k]);
    return out;
  }
  const Weights w1 = axis_weights(a[1]);
  for (std::size_t l = 0; l < w1.idx.size(); ++l) {
    for (std::size_t k = 0; k < w0.idx.size(); ++k) {
      const Vector& g = value(w0.idx[k] + grid_.nodes * w1.idx[l]);
      out.col(0) += w0.dw[k] * w1.w[l] * g;
      out.col(1) += w0.w[k] * w1.dw[l] * g;
    }
  }
  return out;
}

Matrix LeafGraph::fd_slope_axis(int j, int axis) const {
  const int n = grid_.nodes;
  const int i0 = j % n, i1 = j / n;
  const int pos = axis == 0 ? i0 : i1;
  std::vector<std::pair<int, double>> st;
  slope_stencil(pos, n, st);
  Vector out = Vector::Zero(chart_.m_s());
  for (auto [i, k] : st) {
    const int idx = axis == 0 ? i + n * i1 : i0 + n * i;
    out += k * value(idx);
  }
  return out / spacing();
}

Matrix LeafGraph::slope(int j) const {
  Matrix out(chart_.m_s(), m_u());
  for (int axis = 0; axis < m_u(); ++axis) out.col(axis) = fd_slope_axis(j, axis);
  return out;
}

Vector LeafGraph::offset(const Vector& a) const { return chart_.unstable * a + chart_.stable * eval(a); }

Matrix LeafGraph::tangent(const Vector& a) const {
  return chart_.unstable + chart_.stable * eval_derivative(a);
}

Vector LeafGraph::point(const SmoothSystem& system, const Vector& a) const {
  return system.translate(chart_.base, offset(a));
}

double LeafGraph::lipschitz(const NormedSpace& space) const {
  const int n = grid_.nodes;
  double best = 0.0;
  for (int j = 0; j < size(); ++j) {
    const int i0 = j % n, i1 = j / n;
    for (int axis = 0; axis < m_u(); ++axis) {
      const int next = axis == 0 ? (i0 + 1 < n ? j + 1 : -1) : (i1 + 1 < n ? j + n : -1);
      if (next < 0) continue;
      const double num = space.norm(chart_.stable * (value(next) - value(j)));
      const double den = space.norm(chart_.unstable * (node(next) - node(j)));
      best = std::max(best, num / den);
    }
  }
  return best;
}

double LeafGraph::sup_distance(const LeafGraph& other, const NormedSpace& space) const {
  if (other.size() != size()) throw InputError("sup_distance: graphs live on different grids");
  double best = 0.0;
  for (int j = 0; j < size(); ++j) best = std::max(best, space.norm(chart_.stable * (value(j) - other.value(j))));
  return best;
}

// ---------------------------------------------------------------------------
// Graph transforms

std::pair<Vector, Vector> leaf_image(const SmoothSystem& system, const LeafGraph& source, const ChartFrame& target,
                                     const Vector& a) {
  const Vector y = system.map(source.point(system, a));
  return target.coords(system.displacement(target.base, y));
}

namespace {

Matrix image_jacobian(const SmoothSystem& system, const LeafGraph& source, const ChartFrame& target,
                      const Vector& a) {
  const LinearMap df = system.derivative(source.point(system, a));
  return target.inverse.topRows(target.m_u()) * df.apply(source.tangent(a));
}

}  // namespace

Vector leaf_preimage(const SmoothSystem& system, const LeafGraph& source, const ChartFrame& target,
                     const Vector& t, const Vector& guess, long node, const NewtonOptions& o) {
  const double tol = o.tol * std::max(1.0, t.cwiseAbs().maxCoeff());
  auto residual = [&](const Vector& a) { return Vector(leaf_image(system, source, target, a).first - t); };
  const double r = source.grid().radius;
  if (source.m_u() == 1) {
    double x = std::clamp(guess[0], -r, r);
    Vector xv = Vector::Constant(1, x);
    double fx = residual(xv)[0];
    if (std::abs(fx) <= tol) return xv;
    double lo = -r, hi = r;
    double flo = residual(Vector::Constant(1, lo))[0];
    const double fhi = residual(Vector::Constant(1, hi))[0];
    if (flo * fhi > 0) {
      std::ostringstream os;
      os << "graph transform: image of the source leaf does not cover u = " << t[0];
      throw CoverageError(os.str());
    }
    for (int it = 0; it < o.max_iterations; ++it) {
      if ((fx < 0) == (flo < 0)) {
        lo = x;
        flo = fx;
      } else {
        hi = x;
      }
      const double j = image_jacobian(system, source, target, xv)(0, 0);
      double next = j != 0.0 ? x - fx / j : 0.5 * (lo + hi);
      if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
      x = next;
      xv[0] = x;
      fx = residual(xv)[0];
      if (std::abs(fx) <= tol || std::abs(hi - lo) <= 1e-15 * r) return xv;
    }
    throw RootFindingError("graph transform: Newton did not converge", node);
  }
  Vector a = guess;
  Vector fa = residual(a);
  for (int it = 0; it < o.max_iterations; ++it) {
    if (fa.cwiseAbs().maxCoeff() <= tol) return a;
    const Vector step = image_jacobian(system, source, target, a).partialPivLu().solve(fa);
    double damp = 1.0;
    bool accepted = false;
    for (int b = 0; b < 30; ++b) {
      const Vector trial = a - damp * step;
      if (source.contains(trial)) {
        const Vector ft = residual(trial);
        if (ft.norm() < fa.norm()) {
          a = trial;
          fa = ft;
          accepted = true;
          break;
        }
      }
      damp *= 0.5;
    }
    if (!accepted) {
      if (!source.contains(a - step)) {
        throw CoverageError("graph transform: preimage leaves the source leaf domain");
      }
      break;
    }
  }
  if (fa.cwiseAbs().maxCoeff() <= tol) return a;
  throw RootFindingError("graph transform: damped Newton did not converge", node);
}

TransformResult graph_transform_step(const SmoothSystem& system, const LeafGraph& source, const ChartFrame& target,
                                     const NewtonOptions& options) {
  TransformResult out{LeafGraph(target, source.grid()), {}};
  const Vector zero = Vector::Zero(source.m_u());
  const Matrix j0 = image_jacobian(system, source, target, zero);
  const auto lu = j0.partialPivLu();
  out.preimages.resize(static_cast<std::size_t>(out.leaf.size()));
  for (int j = 0; j < out.leaf.size(); ++j) {
    const Vector t = out.leaf.node(j);
    const Vector a = leaf_preimage(system, source, target, t, lu.solve(t), j, options);
    out.preimages[static_cast<std::size_t>(j)] = a;
    out.leaf.set_value(j, leaf_image(system, source, target, a).second);
  }
  return out;
}

namespace {

void build_chain(const SmoothSystem& system, const OrbitSplitting& orbit, int index, int depth,
                 const ManifoldOptions& o, UnstableManifold& m) {
  if (index - depth < 0) {
    std::ostringstream os;
    os << "local_unstable_manifold: history before index " << index << " is shorter than depth " << depth;
    throw InputError(os.str());
  }
  m.index = index;
  m.depth = depth;
  m.leaves.clear();
  m.preimages.assign(static_cast<std::size_t>(depth), {});
  std::vector<LeafGraph> rev;
  rev.emplace_back(chart_at(orbit, index - depth), o.grid);
  for (int d = depth - 1; d >= 0; --d) {
    auto res = graph_transform_step(system, rev.back(), chart_at(orbit, index - d), o.newton);
    m.preimages[static_cast<std::size_t>(d)] = std::move(res.preimages);
    rev.push_back(std::move(res.leaf));
  }
  m.leaves.assign(rev.rbegin(), rev.rend());
}

}  // namespace

UnstableManifold local_unstable_manifold(const SmoothSystem& system, const OrbitSplitting& orbit, int index,
                                         const ManifoldOptions& o) {
  if (orbit.m_u < 1 || orbit.m_u > 2) throw UnsupportedDimensionError("local_unstable_manifold: need m_u in {1, 2}");
  if (o.window < 1 || o.start_depth < 1) throw InputError("local_unstable_manifold: invalid depth schedule");
  std::vector<double> dist;
  UnstableManifold prev;
  build_chain(system, orbit, index, o.start_depth, o, prev);
  for (int n = o.start_depth;; n += o.window) {
    const int next_depth = n + o.window;
    if (next_depth > o.max_depth) {
      std::ostringstream os;
      os << "local_unstable_manifold: no convergence to " << o.tol << " within depth " << o.max_depth;
      throw ConvergenceError(os.str(), n);
    }
    UnstableManifold next;
    build_chain(system, orbit, index, next_depth, o, next);
    const double d = next.leaf().sup_distance(prev.leaf(), system.space);
    dist.push_back(d);
    if (dist.size() >= 2 && d > 100.0 * o.tol && d >= dist[dist.size() - 2]) {
      std::ostringstream os;
      os << "local_unstable_manifold: graph transforms do not contract (sup distance " << d << " after "
         << dist[dist.size() - 2] << ")";
      throw HyperbolicityError(os.str());
    }
    prev = std::move(next);
    if (d < o.tol && prev.depth >= o.min_depth) break;
  }
  if (prev.depth < o.min_depth) build_chain(system, orbit, index, o.min_depth, o, prev);
  prev.convergence = dist;
  return prev;
}

// ---------------------------------------------------------------------------
// Checks

BoundReport leaf_checks(const SmoothSystem& system, const OrbitSplitting& orbit, const UnstableManifold& m,
                        const AdaptedNormParams& p, const LeafCheckOptions& o) {
  BoundReport r;
  const auto& space = system.space;
  const LeafGraph& leaf = m.leaf();
  r.check("leaf_lipschitz", leaf.lipschitz(space), 0.1, 0.0, 0.0);
  if (m.depth < 1) {
    r.add_vacuous("leaf_invariance_residual", "chain has no earlier leaf");
    return r;
  }
  const LeafGraph& pre = m.leaves[1];
  double worst = 0.0;
  std::vector<int> inside;
  for (int j = 0; j < pre.size(); ++j) {
    const auto [a, b] = leaf_image(system, pre, leaf.chart(), pre.node(j));
    if (!leaf.contains(a, 0.0)) continue;
    inside.push_back(j);
    worst = std::max(worst, space.norm(leaf.chart().stable * (b - leaf.eval(a))));
  }
  r.check("leaf_invariance_residual", worst, 1e-4, 0.0, 0.0);

  const int i0 = m.index;
  if (i0 - 1 < p.max_terms || i0 + p.max_terms >= orbit.size() || inside.size() < 2) {
    r.add_vacuous("leaf_expansion", "orbit too short around the base point for adapted norms");
    return r;
  }
  Rng rng(o.seed);
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t k = 0; k + 1 < inside.size(); ++k) pairs.push_back({inside[k], inside[k + 1]});
  for (int k = 0; k < o.random_pairs; ++k) {
    const auto a = inside[static_cast<std::size_t>(rng.uniform() * static_cast<double>(inside.size())) % inside.size()];
    const auto b = inside[static_cast<std::size_t>(rng.uniform() * static_cast<double>(inside.size())) % inside.size()];
    if (a != b) pairs.push_back({a, b});
  }
  const LinearMap df0 = orbit.history.derivatives[static_cast<std::size_t>(i0 - 1)];
  const double target = std::exp(p.lambda) - o.chart_delta;
  double worst_nonlinear = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& [j1, j2] : pairs) {
    const Vector z1 = pre.offset(pre.node(j1)), z2 = pre.offset(pre.node(j2));
    const Vector w1 = system.displacement(leaf.chart().base, system.map(pre.point(system, pre.node(j1))));
    const Vector w2 = system.displacement(leaf.chart().base, system.map(pre.point(system, pre.node(j2))));
    const Vector dz = z1 - z2, dw = w1 - w2;
    const double nz = adapted_norm(system, orbit, i0 - 1, dz, p).value;
    const double nw = adapted_norm(system, orbit, i0, dw, p).value;
    const double nl = adapted_norm(system, orbit, i0, dw - df0.apply(dz), p).value;
    r.check("leaf_expansion", target * nz, nw, 1e-9);
    worst_nonlinear = std::max(worst_nonlinear, nl / nz);
    worst_ratio = std::min(worst_ratio, nw / nz);
  }
  r.check("chart_nonlinearity_lipschitz", worst_nonlinear, o.chart_delta, 0.0, 0.0);
  r.constants.push_back({"min_adapted_expansion", worst_ratio});
  r.constants.push_back({"chart_nonlinearity", worst_nonlinear});
  return r;
}

namespace {

LeafGraph random_graph(const ChartFrame& chart, const LeafGrid& grid, Rng& rng) {
  LeafGraph g(chart, grid);
  const int ms = chart.m_s();
  const int mu = chart.m_u();
  Vector alpha(ms), beta(ms);
  const double omega = 2.0 * M_PI / grid.radius;
  for (int s = 0; s < ms; ++s) {
    alpha[s] = rng.uniform(-1.0, 1.0) * 0.02 / grid.radius;
    beta[s] = rng.uniform(-1.0, 1.0) * 0.02 / omega;
  }
  for (int j = 0; j < g.size(); ++j) {
    const Vector a = g.node(j);
    const double q = a.squaredNorm();
    const double s = std::sin(omega * a.sum() / mu);
    g.set_value(j, alpha * q + beta * s);
  }
  return g;
}

}  // namespace

double transform_contraction(const SmoothSystem& system, const OrbitSplitting& orbit, int index,
                             const LeafGrid& grid, Rng& rng) {
  if (index < 1 || index >= orbit.size()) throw InputError("transform_contraction: index outside the orbit");
  const ChartFrame src = chart_at(orbit, index - 1);
  const ChartFrame dst = chart_at(orbit, index);
  const LeafGraph g1 = random_graph(src, grid, rng);
  const LeafGraph g2 = random_graph(src, grid, rng);
  const auto t1 = graph_transform_step(system, g1, dst);
  const auto t2 = graph_transform_step(system, g2, dst);
  return t1.leaf.sup_distance(t2.leaf, system.space) / g1.sup_distance(g2, system.space);
}

Vector shooting_point(const SmoothSystem& system, const OrbitSplitting& orbit, int index, int depth, double a) {
  if (orbit.m_u != 1) throw UnsupportedDimensionError("shooting_point: needs m_u = 1");
  if (index - depth < 0 || depth < 1) throw InputError("shooting_point: invalid depth");
  const auto s0 = static_cast<std::size_t>(index - depth);
  const Vector base = orbit.history.points[s0];
  const Vector dir = orbit.unstable[s0].col(0);
  const ChartFrame target = chart_at(orbit, index);
  auto image = [&](double t) {
    Vector y = system.translate(base, t * dir);
    y = system.iterate(y, depth);
    return target.coords(system.displacement(target.base, y));
  };
  Vector v = dir;
  for (int k = 0; k < depth; ++k) v = orbit.history.derivatives[s0 + static_cast<std::size_t>(k)].apply(v);
  const double growth = (target.inverse.topRows(1) * v)(0);
  const double t0 = a / growth;
  double width = std::max(std::abs(t0), 1e-300) * 0.25;
  double lo = t0 - width, hi = t0 + width;
  auto g = [&](double t) { return image(t).first[0] - a; };
  double glo = g(lo), ghi = g(hi);
  for (int k = 0; k < 60 && glo * ghi > 0; ++k) {
    width *= 2.0;
    lo = t0 - width;
    hi = t0 + width;
    glo = g(lo);
    ghi = g(hi);
  }
  if (glo * ghi > 0) throw RootFindingError("shooting_point: no bracket for the target u-coordinate", 0);
  for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, std::abs(t0)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return image(0.5 * (lo + hi)).second;
}

// ---------------------------------------------------------------------------
// Leaf volumes

VolumeEstimate leaf_integral(const SmoothSystem& system, const LeafGraph& leaf, double lo, double hi,
                             const std::function<double(double)>& density, int gauss_points) {
  if (leaf.m_u() != 1) throw UnsupportedDimensionError("leaf_integral: needs m_u = 1");
  const Vector lov = Vector::Constant(1, lo), hiv = Vector::Constant(1, hi);
  if (!(lo <= hi) || !leaf.contains(lov) || !leaf.contains(hiv)) {
    throw InputError("leaf region must lie inside the leaf grid");
  }
  const Rule& fine = gauss_rule(gauss_points);
  const Rule& coarse = gauss_rule(std::max(2, gauss_points / 2));
  const double r = leaf.grid().radius, h = leaf.spacing();
  double q_fine = 0.0, q_coarse = 0.0;
  for (int c = 0; c + 1 < leaf.grid().nodes; ++c) {
    const double a0 = std::max(lo, -r + c * h), a1 = std::min(hi, -r + (c + 1) * h);
    if (a1 <= a0) continue;
    const double mid = 0.5 * (a0 + a1), half = 0.5 * (a1 - a0);
    auto rule = [&](const Rule& q) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.x.size(); ++i) {
        const double a = mid + half * q.x[i];
        const Vector av = Vector::Constant(1, a);
        s += q.w[i] * density(a) * system.space.norm(leaf.tangent(av).col(0));
      }
      return s * half;
    };
    q_fine += rule(fine);
    q_coarse += rule(coarse);
  }
  VolumeEstimate out;
  out.value = q_fine;
  out.std_error = std::abs(q_fine - q_coarse) + 1e-15 * std::abs(q_fine);
  out.method = VolumeMethod::exact_1d;
  return out;
}

VolumeEstimate leaf_volume(const SmoothSystem& system, const LeafGraph& leaf, const Vector& lo, const Vector& hi,
                           const LeafVolumeOptions& o) {
  if (lo.size() != leaf.m_u() || hi.size() != leaf.m_u()) throw InputError("leaf_volume: region dimension mismatch");
  if (leaf.m_u() == 1) {
    return leaf_integral(system, leaf, lo[0], hi[0], [](double) { return 1.0; }, o.gauss_points);
  }
  if (!leaf.contains(lo) || !leaf.contains(hi) || (lo.array() > hi.array()).any()) {
    throw InputError("leaf region must lie inside the leaf grid");
  }
  const Rule& q = gauss_rule(std::max(2, o.gauss_points / 2));
  const Rule& qc = gauss_rule(std::max(2, o.gauss_points / 4));
  const double r = leaf.grid().radius, h = leaf.spacing();
  const int n = leaf.grid().nodes;
  double fine = 0.0, coarse = 0.0, var = 0.0;
  long samples = 0;
  std::uint64_t point = 0;
  auto integrand = [&](const Vector& a, double& se) {
    MonteCarloOptions mc = o.mc;
    mc.seed = mix_seed(o.mc.seed, point++);
    const auto v = induced_volume_parallelepiped(Frame(system.space, leaf.tangent(a)), mc);
    se = v.std_error;
    samples += v.n_samples;
    return v.value;
  };
  for (int c1 = 0; c1 + 1 < n; ++c1) {
    const double b0 = std::max(lo[1], -r + c1 * h), b1 = std::min(hi[1], -r + (c1 + 1) * h);
    if (b1 <= b0) continue;
    for (int c0 = 0; c0 + 1 < n; ++c0) {
      const double a0 = std::max(lo[0], -r + c0 * h), a1 = std::min(hi[0], -r + (c0 + 1) * h);
      if (a1 <= a0) continue;
      const double ma = 0.5 * (a0 + a1), ha = 0.5 * (a1 - a0), mb = 0.5 * (b0 + b1), hb = 0.5 * (b1 - b0);
      for (const Rule* rule : {&q, &qc}) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule->x.size(); ++i) {
          for (std::size_t k = 0; k < rule->x.size(); ++k) {
            Vector a(2);
            a << ma + ha * rule->x[i], mb + hb * rule->x[k];
            double se = 0.0;
            const double wgt = rule->w[i] * rule->w[k] * ha * hb;
            s += wgt * integrand(a, se);
            if (rule == &q) var += wgt * wgt * se * se;
          }
        }
        (rule == &q ? fine : coarse) += s;
      }
    }
  }
  VolumeEstimate out;
  out.value = fine;
  out.std_error = std::sqrt(var) + std::abs(fine - coarse);
  out.n_samples = samples;
  out.method = VolumeMethod::monte_carlo;
  return out;
}

// ---------------------------------------------------------------------------
// Distortion

DistortionTable distortion_table(const SmoothSystem& system, const UnstableManifold& m, const OrbitSplitting& orbit,
                                 const DistortionOptions& o) {
  (void)orbit;
  if (m.leaf().m_u() != 1) throw UnsupportedDimensionError("distortion_table: needs m_u = 1");
  constexpr int kTangentMargin = 20;
  if (m.depth < o.max_terms + kTangentMargin) {
    std::ostringstream os;
    os << "distortion_table: manifold depth " << m.depth << " is below max_terms + " << kTangentMargin;
    throw InputError(os.str());
  }
  const auto& space = system.space;
  const LeafGraph& leaf = m.leaf();
  const int nodes = leaf.size();
  const int n = m.depth;
  const int nmax = o.max_terms;

  // Linear guesses for the lineage Newton solves, one per depth.
  std::vector<double> inv_growth(static_cast<std::size_t>(n + 1), 0.0);
  for (int d = 1; d <= n; ++d) {
    const Vector zero = Vector::Zero(1);
    inv_growth[static_cast<std::size_t>(d)] =
        1.0 / image_jacobian(system, m.leaves[static_cast<std::size_t>(d)], m.leaves[static_cast<std::size_t>(d - 1)].chart(), zero)(0, 0);
  }

  std::vector<std::vector<double>> log_j(static_cast<std::size_t>(nodes));
  DistortionTable t;
  for (int j = 0; j < nodes; ++j) {
    std::vector<double> a(static_cast<std::size_t>(n + 1));
    a[0] = leaf.node(j)[0];
    a[1] = m.preimages[0][static_cast<std::size_t>(j)][0];
    for (int d = 2; d <= n; ++d) {
      const auto du = static_cast<std::size_t>(d);
      const Vector target = Vector::Constant(1, a[du - 1]);
      const Vector guess = Vector::Constant(1, a[du - 1] * inv_growth[du]);
      a[du] = leaf_preimage(system, m.leaves[du], m.leaves[du - 1].chart(), target, guess, j)[0];
    }
    // Tangent of the flat leaf at the bottom pushed up the lineage orbit.
    Vector tan = m.leaves[static_cast<std::size_t>(n)].tangent(Vector::Constant(1, a[static_cast<std::size_t>(n)])).col(0);
    std::vector<double> lj(static_cast<std::size_t>(n + 1), 0.0);
    Vector deeper;
    for (int d = n; d >= 0; --d) {
      const Vector y = m.leaves[static_cast<std::size_t>(d)].point(system, Vector::Constant(1, a[static_cast<std::size_t>(d)]));
      const Vector img = system.derivative(y).apply(tan);
      lj[static_cast<std::size_t>(d)] = std::log(space.norm(img) / space.norm(tan));
      if (d < n && d <= nmax) {
        // Interpolated leaf point against the image of the deeper one.
        const Vector alt = system.derivative(system.map(deeper)).apply(tan);
        t.noise = std::max(t.noise, std::abs(std::log(space.norm(alt) / space.norm(img))));
      }
      deeper = y;
      tan = img / img.norm();
      if (d == 0) {
        t.nodes.push_back(leaf.node(j));
        t.points.push_back(y);
      }
    }
    log_j[static_cast<std::size_t>(j)] = std::move(lj);
  }
  const int c = leaf.center();
  const auto& ref = log_j[static_cast<std::size_t>(c)];
  t.log_ju.resize(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) t.log_ju[static_cast<std::size_t>(j)] = log_j[static_cast<std::size_t>(j)][0];

  // Increments inc[N-1][j] = log J(x'_{-N}) - log J(y_{-N}).
  std::vector<std::vector<double>> inc;
  std::vector<double> acc(static_cast<std::size_t>(nodes), 0.0);
  int terms = 0;
  for (int big_n = 1; big_n <= nmax; ++big_n) {
    std::vector<double> row(static_cast<std::size_t>(nodes));
    double worst = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      row[ju] = j == c ? 0.0 : ref[static_cast<std::size_t>(big_n)] - log_j[ju][static_cast<std::size_t>(big_n)];
      acc[ju] += row[ju];
      worst = std::max(worst, std::abs(row[ju]));
    }
    inc.push_back(row);
    t.partial.push_back(acc);
    terms = big_n;
    if (worst < o.tol) break;
  }
  t.terms = terms;
  t.log_delta = acc;

  t.tail_sums.assign(static_cast<std::size_t>(terms), 0.0);
  for (int big_n = 0; big_n < terms; ++big_n) {
    double best = 0.0;
    for (int j = 0; j < nodes; ++j) {
      double s = 0.0;
      for (int k = big_n; k < terms; ++k) s += std::abs(inc[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
      best = std::max(best, s);
    }
    t.tail_sums[static_cast<std::size_t>(big_n)] = best;
  }
  // Fit log T_N = c + N log rho where T_N stands clear of the lineage noise
  // (two log J values per increment, summed over the remaining terms).
  t.fit_floor = std::max(1e-12, 10.0 * 2.0 * t.noise * terms);
  std::vector<double> xs, ys;
  for (int big_n = 0; big_n < terms; ++big_n) {
    if (t.tail_sums[static_cast<std::size_t>(big_n)] > t.fit_floor) {
      xs.push_back(big_n);
      ys.push_back(std::log(t.tail_sums[static_cast<std::size_t>(big_n)]));
    }
  }
  t.fit_points = static_cast<int>(xs.size());
  if (xs.size() >= 3) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    t.rho = std::exp(slope);
    t.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  } else {
    // Constant Jacobian along the leaf: every increment vanishes.
    t.rho = 0.0;
    t.r_squared = 1.0;
  }
  if (t.rho >= 1.0) {
    std::ostringstream os;
    os << "distortion_table: increments do not decay geometrically (fitted rate " << t.rho << ")";
    throw DistortionError(os.str());
  }
  const double last_rate = t.rho > 0 ? t.rho : 0.5;
  t.tail_bound.resize(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    const double last = std::abs(inc.back()[static_cast<std::size_t>(j)]);
    t.tail_bound[static_cast<std::size_t>(j)] = last * last_rate / (1.0 - last_rate);
  }
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      const double dist = space.norm(system.displacement(t.points[static_cast<std::size_t>(i)], t.points[static_cast<std::size_t>(j)]));
      if (dist <= 0) continue;
      t.lipschitz = std::max(t.lipschitz, std::abs(t.log_delta[static_cast<std::size_t>(i)] - t.log_delta[static_cast<std::size_t>(j)]) / dist);
    }
  }
  return t;
}

json DistortionTable::to_json() const {
  json nodes_j = json::array(), ld = json::array(), tb = json::array(), lj = json::array(), ts = json::array();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes_j.push_back(json_number(nodes[i][0]));
    ld.push_back(json_number(log_delta[i]));
    tb.push_back(json_number(tail_bound[i]));
    lj.push_back(json_number(log_ju[i]));
  }
  for (double v : tail_sums) ts.push_back(json_number(v));
  return {{"u", nodes_j},          {"log_delta", ld},        {"tail_bound", tb},
          {"log_ju", lj},          {"tail_sums", ts},        {"terms", terms},
          {"rho", json_number(rho)}, {"r_squared", json_number(r_squared)}, {"fit_points", fit_points},
          {"noise", json_number(noise)}, {"fit_floor", json_number(fit_floor)},
          {"lipschitz", json_number(lipschitz)}};
}

}  // namespace srbvol

namespace srbvol {

double log_unstable_jacobian(const SmoothSystem& system, const LeafGraph& leaf, double a) {
  const Vector av = Vector::Constant(1, a);
  const Vector t = leaf.tangent(av).col(0);
  const Vector img = system.derivative(leaf.point(system, av)).apply(t);
  return std::log(system.space.norm(img) / system.space.norm(t));
}

namespace {

// integral over [lo, hi] of |fn| with Gauss rules on cells of width h
// aligned at lo.
double abs_gauss_integral(double lo, double hi, double h, int gauss_points, const std::function<double(double)>& fn) {
  const Rule& q = gauss_rule(gauss_points);
  double total = 0.0;
  for (double a0 = lo; a0 < hi; a0 += h) {
    const double a1 = std::min(hi, a0 + h);
    const double mid = 0.5 * (a0 + a1), half = 0.5 * (a1 - a0);
    for (std::size_t i = 0; i < q.x.size(); ++i) total += q.w[i] * half * std::abs(fn(mid + half * q.x[i]));
  }
  return total;
}

ChangeOfVariables change_sides(const SmoothSystem& system, const UnstableManifold& m, double lo, double hi,
                               int gauss_points, double& quad_var) {
  if (m.depth < 1) throw InputError("change_of_variables: manifold has no earlier leaf");
  const LeafGraph& src = m.leaves[1];
  const LeafGraph& dst = m.leaves[0];
  ChangeOfVariables c;
  c.lo = lo;
  c.hi = hi;
  const double u0 = leaf_image(system, src, dst.chart(), Vector::Constant(1, lo)).first[0];
  const double u1 = leaf_image(system, src, dst.chart(), Vector::Constant(1, hi)).first[0];
  c.image_lo = std::min(u0, u1);
  c.image_hi = std::max(u0, u1);
  const auto img = leaf_volume(system, dst, Vector::Constant(1, c.image_lo), Vector::Constant(1, c.image_hi),
                               LeafVolumeOptions{gauss_points, {}});
  const auto jac = leaf_integral(
      system, src, lo, hi, [&](double a) { return std::exp(log_unstable_jacobian(system, src, a)); }, gauss_points);
  c.image_volume = img.value;
  c.jacobian_integral = jac.value;
  quad_var = img.std_error * img.std_error + jac.std_error * jac.std_error;
  return c;
}

}  // namespace

ChangeOfVariables change_of_variables(const SmoothSystem& system, const UnstableManifold& m,
                                      const UnstableManifold* refined, double lo, double hi, int gauss_points) {
  if (m.leaf().m_u() != 1) throw UnsupportedDimensionError("change_of_variables: needs m_u = 1");
  double var = 0.0;
  ChangeOfVariables c = change_sides(system, m, lo, hi, gauss_points, var);
  if (refined != nullptr) {
    // Report the refined sides. Their interpolation error is bounded by the
    // L1 distance between the coarse and refined integrands on each side.
    double rvar = 0.0;
    const ChangeOfVariables r = change_sides(system, *refined, lo, hi, gauss_points, rvar);
    const auto& cs = m.leaves[1];
    const auto& rs = refined->leaves[1];
    const auto& cd = m.leaves[0];
    const auto& rd = refined->leaves[0];
    auto tangent_norm = [&](const LeafGraph& g, double a) {
      return system.space.norm(g.tangent(Vector::Constant(1, a)).col(0));
    };
    auto pushed_norm = [&](const LeafGraph& g, double a) {
      const Vector av = Vector::Constant(1, a);
      return system.space.norm(system.derivative(g.point(system, av)).apply(Vector(g.tangent(av).col(0))));
    };
    const double h = rs.spacing();
    const double img_l1 = abs_gauss_integral(r.image_lo, r.image_hi, h, gauss_points, [&](double a) {
      return tangent_norm(rd, a) - tangent_norm(cd, a);
    });
    const double jac_l1 = abs_gauss_integral(lo, hi, h, gauss_points, [&](double a) {
      return pushed_norm(rs, a) - pushed_norm(cs, a);
    });
    c = r;
    var = rvar + (img_l1 + jac_l1) * (img_l1 + jac_l1);
  }
  c.sigma = std::sqrt(var) + 1e-14 * std::abs(c.image_volume);
  return c;
}

}  // namespace srbvol
