#include "srbvol/lyapunov.hpp"

#include "srbvol/error.hpp"
#include "srbvol/format.hpp"
#include "srbvol/geometry.hpp"
#include "srbvol/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace srbvol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_euclidean(const NormedSpace& s) { return s.kind() == NormKind::lp && s.p() == 2.0; }

Matrix thin_q(const Matrix& v) {
  Eigen::HouseholderQR<Matrix> qr(v);
  Matrix q = qr.householderQ() * Matrix::Identity(v.rows(), v.cols());
  return q;
}

Matrix random_orthonormal(Rng& rng, int d, int k) {
  Matrix v(d, k);
  for (int j = 0; j < k; ++j) v.col(j) = rng.normal_vector(d);
  return thin_q(v);
}

// log m(P[Q1]) - log m(P[Q0]) for orthonormal j-frames, with its standard error.
std::pair<double, double> endpoint_correction(const NormedSpace& space, const Matrix& q0, const Matrix& q1,
                                              const MonteCarloOptions& mc) {
  const int j = static_cast<int>(q0.cols());
  if (j == space.dim() || is_euclidean(space)) return {0.0, 0.0};
  if (j == 1) return {std::log(space.norm(q1.col(0))) - std::log(space.norm(q0.col(0))), 0.0};
  const Frame f0(space, q0), f1(space, q1);
  const auto vols = coupled_ball_volumes({&f0, &f1}, mc);
  // m(P[Q]) = omega_j / coordinate volume of the unit ball.
  const double corr = std::log(vols[0].value) - std::log(vols[1].value);
  return {corr, std::hypot(vols[0].rel_error(), vols[1].rel_error())};
}

}  // namespace

// ---------------------------------------------------------------------------
// Histories

double OrbitHistory::consistency_residual(const SmoothSystem& system) const {
  double worst = 0.0;
  for (int i = 0; i + 1 < size(); ++i) {
    const Vector d = system.displacement(points[static_cast<std::size_t>(i + 1)],
                                         system.map(points[static_cast<std::size_t>(i)]));
    worst = std::max(worst, system.space.norm(d));
  }
  return worst;
}

OrbitHistory make_history(const SmoothSystem& system, const Vector& start, int length) {
  if (length < 1) throw InputError("make_history: length must be positive");
  OrbitHistory h;
  h.points.reserve(static_cast<std::size_t>(length));
  h.derivatives.reserve(static_cast<std::size_t>(length));
  Vector x = system.wrap(start);
  for (int i = 0; i < length; ++i) {
    h.points.push_back(x);
    h.derivatives.push_back(system.derivative(x));
    if (i + 1 < length) x = system.map(x);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Spectrum

LyapunovReport lyapunov_spectrum(const SmoothSystem& system, const Vector& x0, const LyapunovOptions& o) {
  const int d = system.dim();
  const int k = o.k < 0 ? std::min(d, 4) : o.k;
  if (k < 1 || k > d || k > 4) throw InputError("lyapunov_spectrum: need 1 <= k <= min(D, 4)");
  if (o.n_steps < 2) throw InputError("lyapunov_spectrum: n_steps must be at least 2");
  if (o.rebase_every < 1) throw InputError("lyapunov_spectrum: rebase_every must be positive");
  const long n = o.n_steps;
  const int nb = std::max(1, o.batches);

  LyapunovReport rep;
  int restarts = 0;
  Vector x = system.wrap(x0);
  for (;;) {
    Rng rng(mix_seed(o.seed, static_cast<std::uint64_t>(restarts)));
    // Columns are drawn one after another, so a j-run starts from the first
    // j columns of a k-run with the same seed.
    Matrix q = random_orthonormal(rng, d, k);
    bool collapsed = false;
    // Transient: let the frame settle before anything is accumulated.
    const int warm = static_cast<int>(std::min<long>(100, n / 10));
    for (int t = 0; t < warm && !collapsed; ++t) {
      q = system.derivative(x).apply(q);
      x = system.map(x);
      Eigen::HouseholderQR<Matrix> qr(q);
      const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
      for (int i = 0; i < k; ++i) {
        if (!(std::abs(r(i, i)) > 1e-300) || !std::isfinite(r(i, i))) collapsed = true;
      }
      q = qr.householderQ() * Matrix::Identity(d, k);
    }
    const Matrix q_start = q;
    std::vector<double> cum(static_cast<std::size_t>(k), 0.0);
    std::vector<std::vector<double>> batch(static_cast<std::size_t>(nb), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    std::vector<long> batch_len(static_cast<std::size_t>(nb), 0);
    std::vector<double> half(static_cast<std::size_t>(k), 0.0);
    long half_t = 0;
    rep.trace_steps.clear();
    rep.trace.assign(static_cast<std::size_t>(k), {});
    const long trace_every = std::max<long>(1, n / std::max(1, o.trace_points));
    long next_trace = trace_every;
    long rebases = 0;
    int since = 0;
    Matrix v = q;
    for (long t = 0; t < n && !collapsed; ++t) {
      v = system.derivative(x).apply(v);
      x = system.map(x);
      ++since;
      // Columns can all grow at the same rate while collapsing onto the
      // leading direction, so conditioning is read off the R factor.
      Eigen::HouseholderQR<Matrix> qr(v);
      const Matrix& m = qr.matrixQR();
      const Eigen::VectorXd rdiag = m.diagonal().head(k).cwiseAbs();
      const bool rebase = since >= o.rebase_every || t == n - 1 || !rdiag.allFinite() ||
                          rdiag.maxCoeff() > o.cond_limit * rdiag.minCoeff();
      if (!rebase) continue;
      const long b = std::min<long>(nb - 1, t * nb / n);
      for (int i = 0; i < k; ++i) {
        const double rii = std::abs(m(i, i));
        if (!(rii > 1e-300) || !std::isfinite(rii)) {
          collapsed = true;
          break;
        }
        const double l = std::log(rii);
        cum[static_cast<std::size_t>(i)] += l;
        batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] += l;
      }
      batch_len[static_cast<std::size_t>(b)] += since;
      if (collapsed) break;
      v = qr.householderQ() * Matrix::Identity(d, k);
      since = 0;
      ++rebases;
      if (half_t == 0 && t + 1 >= n / 2) {
        half = cum;
        half_t = t + 1;
      }
      if (t + 1 >= next_trace || t == n - 1) {
        next_trace += trace_every;
        rep.trace_steps.push_back(t + 1);
        double s = 0.0;
        for (int j = 0; j < k; ++j) {
          s += cum[static_cast<std::size_t>(j)];
          rep.trace[static_cast<std::size_t>(j)].push_back(s / static_cast<double>(t + 1));
        }
      }
    }
    if (collapsed) {
      ++restarts;
      if (restarts > o.max_restarts) {
        std::ostringstream os;
        os << "lyapunov_spectrum: frame collapsed " << restarts << " times (restart cap " << o.max_restarts << ")";
        throw ConditioningError(os.str());
      }
      continue;
    }

    rep.sums.assign(static_cast<std::size_t>(k), 0.0);
    rep.sums_sigma.assign(static_cast<std::size_t>(k), 0.0);
    const double nd = static_cast<double>(n);
    double acc = 0.0, acc_half = 0.0;
    for (int j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      acc += cum[ju];
      acc_half += half[ju];
      MonteCarloOptions mc = o.mc;
      mc.seed = mix_seed(o.mc.seed, static_cast<std::uint64_t>(j));
      const auto [corr, corr_se] = endpoint_correction(system.space, q_start.leftCols(j + 1), v.leftCols(j + 1), mc);
      rep.sums[ju] = (acc + corr) / nd;

      std::vector<double> rates;
      for (int b = 0; b < nb; ++b) {
        if (batch_len[static_cast<std::size_t>(b)] == 0) continue;
        double s = 0.0;
        for (int i = 0; i <= j; ++i) s += batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
        rates.push_back(s / static_cast<double>(batch_len[static_cast<std::size_t>(b)]));
      }
      double se = 0.0;
      if (rates.size() > 1) {
        const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
        double var = 0.0;
        for (double r : rates) var += (r - mean) * (r - mean);
        var /= static_cast<double>(rates.size() - 1);
        se = std::sqrt(var / static_cast<double>(rates.size()));
      }
      const double drift = half_t > 0 ? std::abs(acc / nd - acc_half / static_cast<double>(half_t)) : 0.0;
      const double floor = 1e-13 * (1.0 + std::abs(rep.sums[ju]));
      rep.sums_sigma[ju] = std::sqrt(se * se + drift * drift + std::pow(corr_se / nd, 2) + floor * floor);
    }
    rep.unstable_basis = v;
    rep.rebases = rebases;
    break;
  }
  rep.restarts = restarts;
  rep.n_steps = n;

  rep.exponents.clear();
  rep.sigma.clear();
  for (int j = 0; j < k; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double prev = j == 0 ? 0.0 : rep.sums[ju - 1];
    const double prev_s = j == 0 ? 0.0 : rep.sums_sigma[ju - 1];
    rep.exponents.push_back(rep.sums[ju] - prev);
    rep.sigma.push_back(std::hypot(rep.sums_sigma[ju], prev_s));
  }
  rep.distinct.clear();
  rep.multiplicities.clear();
  std::size_t i = 0;
  while (i < rep.exponents.size()) {
    std::size_t j = i + 1;
    double total = rep.exponents[i];
    while (j < rep.exponents.size()) {
      const double tol = std::max(o.merge_sigmas * std::max(rep.sigma[j - 1], rep.sigma[j]), o.merge_floor);
      if (std::abs(rep.exponents[j - 1] - rep.exponents[j]) > tol) break;
      total += rep.exponents[j];
      ++j;
    }
    rep.distinct.push_back(total / static_cast<double>(j - i));
    rep.multiplicities.push_back(static_cast<int>(j - i));
    i = j;
  }
  int mu = 0;
  for (std::size_t e = 0; e < rep.exponents.size(); ++e) {
    if (rep.exponents[e] > std::max(3.0 * rep.sigma[e], o.merge_floor)) ++mu;
  }
  rep.unstable_dim = mu;
  rep.unstable_basis = rep.unstable_basis.leftCols(mu).eval();
  return rep;
}

json LyapunovReport::to_json() const {
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(json_number(x));
    return a;
  };
  json traces = json::array();
  for (const auto& t : trace) traces.push_back(arr(t));
  return {{"n_steps", n_steps},
          {"exponents", arr(exponents)},
          {"sigma", arr(sigma)},
          {"sums", arr(sums)},
          {"sums_sigma", arr(sums_sigma)},
          {"distinct", arr(distinct)},
          {"multiplicities", multiplicities},
          {"unstable_dim", unstable_dim},
          {"restarts", restarts},
          {"rebases", rebases},
          {"trace_steps", trace_steps},
          {"trace", traces}};
}

// ---------------------------------------------------------------------------
// Unstable frames

namespace {

// Pushes a random m-frame from history index `from` to the end; returns the
// frames at the last two indices.
std::pair<Matrix, Matrix> push_frame(const OrbitHistory& h, int from, int m, Rng& rng) {
  const int d = static_cast<int>(h.points.front().size());
  Matrix q = random_orthonormal(rng, d, m);
  Matrix prev = q;
  for (int i = from; i + 1 < h.size(); ++i) {
    prev = q;
    q = thin_q(h.derivatives[static_cast<std::size_t>(i)].apply(q));
  }
  return {prev, q};
}

double aperture(const NormedSpace& space, const Matrix& a, const Matrix& b) {
  if (a.cols() <= 3) return gap_distances(Frame(space, a), Frame(space, b)).delta_a;
  // Euclidean sine of the largest principal angle for wide frames.
  Eigen::JacobiSVD<Matrix> svd(thin_q(a).transpose() * thin_q(b));
  const double c = svd.singularValues().minCoeff();
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

}  // namespace

UnstableFrameResult unstable_frame(const SmoothSystem& system, const OrbitHistory& history, int m_u,
                                   const UnstableFrameOptions& o) {
  const int d = system.dim();
  if (m_u < 1 || m_u > d) throw InputError("unstable_frame: m_u must lie in [1, D]");
  if (history.size() < 2) throw InputError("unstable_frame: history needs at least two points");
  UnstableFrameResult out;
  if (history.size() - 1 < o.warmup) {
    std::ostringstream os;
    os << "history length " << history.size() - 1 << " is below the warm-up " << o.warmup;
    out.warnings.push_back(os.str());
  }
  const double consistency = history.consistency_residual(system);
  if (consistency > 1e-8) {
    std::ostringstream os;
    os << "history is not a forward orbit (residual " << consistency << "); was it reversed?";
    out.warnings.push_back(os.str());
  }
  Rng rng(o.seed);
  const int last = history.size() - 1;
  const auto full = push_frame(history, 0, m_u, rng);
  const auto half = push_frame(history, last / 2, m_u, rng);
  out.basis = full.second;
  out.convergence_gap = aperture(system.space, full.second, half.second);
  const Matrix pushed = history.derivatives[static_cast<std::size_t>(last - 1)].apply(half.first);
  out.invariance_residual = aperture(system.space, pushed, full.second);
  if (out.convergence_gap > o.gap_tol) {
    std::ostringstream os;
    os << "unstable frame not converged: gap " << out.convergence_gap << " above " << o.gap_tol;
    out.warnings.push_back(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting along an orbit

std::pair<Vector, Vector> OrbitSplitting::decompose(int i, const Vector& v) const {
  const auto iu = static_cast<std::size_t>(i);
  const auto& u = unstable[iu];
  const auto& s = stable[iu];
  Matrix m(v.size(), u.cols() + s.cols());
  m << u, s;
  const Vector c = m.partialPivLu().solve(v);
  return {c.head(u.cols()), c.tail(s.cols())};
}

Matrix OrbitSplitting::projection_unstable(int i) const {
  const auto iu = static_cast<std::size_t>(i);
  const auto& u = unstable[iu];
  const auto& s = stable[iu];
  Matrix m(u.rows(), u.cols() + s.cols());
  m << u, s;
  Matrix sel = Matrix::Zero(u.rows(), m.cols());
  sel.leftCols(u.cols()) = u;
  return sel * m.inverse();
}

OrbitSplitting split_orbit(const SmoothSystem& system, const Vector& start, int length, int m_u, int margin,
                           std::uint64_t seed) {
  const int d = system.dim();
  if (m_u < 0 || m_u > d) throw InputError("split_orbit: m_u must lie in [0, D]");
  if (length < 1 || margin < 0) throw InputError("split_orbit: invalid length or margin");
  const OrbitHistory full = make_history(system, start, length + 2 * margin);
  const int total = full.size();
  OrbitSplitting out;
  out.m_u = m_u;
  out.history.points.assign(full.points.begin() + margin, full.points.begin() + margin + length);
  out.history.derivatives.assign(full.derivatives.begin() + margin, full.derivatives.begin() + margin + length);
  out.unstable.assign(static_cast<std::size_t>(length), Matrix(d, 0));
  out.stable.assign(static_cast<std::size_t>(length), Matrix::Identity(d, d));
  if (m_u == 0) return out;
  Rng rng(seed);
  Matrix q = random_orthonormal(rng, d, m_u);
  for (int t = 0; t < total; ++t) {
    if (t >= margin && t < margin + length) out.unstable[static_cast<std::size_t>(t - margin)] = q;
    q = thin_q(full.derivatives[static_cast<std::size_t>(t)].apply(q));
  }
  if (m_u == d) {
    for (auto& s : out.stable) s = Matrix(d, 0);
    return out;
  }
  Matrix w = random_orthonormal(rng, d, m_u);
  for (int t = total - 1; t >= margin; --t) {
    w = thin_q(full.derivatives[static_cast<std::size_t>(t)].matrix.transpose() * w);
    if (t < margin + length) {
      Eigen::HouseholderQR<Matrix> qr(w);
      const Matrix qfull = qr.householderQ();
      out.stable[static_cast<std::size_t>(t - margin)] = qfull.rightCols(d - m_u);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adapted norms

AdaptedNormParams AdaptedNormParams::from_exponents(const std::vector<double>& exponents) {
  double pos = kInf, neg = -kInf;
  int mu = 0;
  for (double e : exponents) {
    if (e > 0) {
      pos = std::min(pos, e);
      ++mu;
    } else if (e < 0) {
      neg = std::max(neg, e);
    }
  }
  if (mu == 0) throw InputError("adapted norm parameters need a positive exponent");
  AdaptedNormParams p;
  p.lambda0 = std::min(pos, std::isfinite(neg) ? -neg : kInf);
  p.delta0 = p.lambda0 / 20.0;
  p.lambda = p.lambda0 - 2.0 * p.delta0;
  p.delta2 = p.lambda / (100.0 * mu);
  return p;
}

namespace {

struct PartialSum {
  double sum = 0.0;
  double tail = 0.0;
  int terms = 0;
  bool limited = false;
};

// Sum of t_n = |v_n| e^{n lambda} with v_{n+1} = next(n, v_n); next returns
// false when the history runs out.
template <class Next>
PartialSum run_series(const NormedSpace& space, Vector v, double lambda, const AdaptedNormParams& p, Next next) {
  PartialSum s;
  double term = space.norm(v);
  if (term == 0.0) return s;
  const double first = term;
  s.sum = term;
  s.terms = 1;
  double ratio = 1.0;
  for (int n = 1; n <= p.max_terms; ++n) {
    if (!next(n, v)) {
      s.limited = true;
      break;
    }
    const double t = space.norm(v) * std::exp(n * lambda);
    if (t > 1e8 * first) throw DivergenceError("adapted norm: series terms grow; direction is not hyperbolic");
    ratio = t / term;
    term = t;
    s.sum += t;
    s.terms = n + 1;
    if (t < p.rel_stop * s.sum) {
      s.tail = ratio < 1.0 ? t * ratio / (1.0 - ratio) : t;
      return s;
    }
  }
  if (s.terms == 1) {
    s.tail = kInf;
    return s;
  }
  if (ratio >= 1.0 && !s.limited) {
    throw DivergenceError("adapted norm: series did not decay within the truncation length");
  }
  s.tail = ratio < 1.0 ? term * ratio / (1.0 - ratio) : kInf;
  return s;
}

}  // namespace

AdaptedNorm adapted_norm(const SmoothSystem& system, const OrbitSplitting& orbit, int i, const Vector& v,
                         const AdaptedNormParams& p) {
  if (i < 0 || i >= orbit.size()) throw InputError("adapted_norm: index outside the orbit");
  const auto [a, b] = orbit.decompose(i, v);
  const auto& space = system.space;
  AdaptedNorm out;
  if (orbit.m_u > 0) {
    const Vector u = orbit.unstable[static_cast<std::size_t>(i)] * a;
    auto back = [&](int n, Vector& cur) {
      const int j = i - n;
      if (j < 0) return false;
      const Matrix& uj = orbit.unstable[static_cast<std::size_t>(j)];
      const Matrix img = orbit.history.derivatives[static_cast<std::size_t>(j)].apply(uj);
      cur = uj * img.colPivHouseholderQr().solve(cur);
      return true;
    };
    const PartialSum s = run_series(space, u, p.lambda, p, back);
    out.unstable = s.sum;
    out.unstable_tail = s.tail;
    out.unstable_terms = s.terms;
    out.history_limited = out.history_limited || s.limited;
  }
  if (b.size() > 0) {
    const Vector w = orbit.stable[static_cast<std::size_t>(i)] * b;
    auto fwd = [&](int n, Vector& cur) {
      const int j = i + n - 1;
      if (j + 1 >= orbit.size()) return false;
      cur = orbit.history.derivatives[static_cast<std::size_t>(j)].apply(cur);
      return true;
    };
    const PartialSum s = run_series(space, w, p.lambda, p, fwd);
    out.stable = s.sum;
    out.stable_tail = s.tail;
    out.stable_terms = s.terms;
    out.history_limited = out.history_limited || s.limited;
  }
  out.value = std::max(out.unstable, out.stable);
  out.tail_bound = std::max(out.unstable + out.unstable_tail, out.stable + out.stable_tail) - out.value;
  return out;
}

// ---------------------------------------------------------------------------
// Chart constants

namespace {

double sup_ratio(const NormedSpace& space, const Matrix& image, const Matrix& base,
                 const SphereSearchOptions& search) {
  if (image.cols() == 0) return 0.0;
  if (image.cols() == 1) return space.norm(image.col(0)) / space.norm(base.col(0));
  auto f = [&](const Vector& c) { return space.norm(image * c) / space.norm(base * c); };
  return maximize_on_sphere(static_cast<int>(image.cols()), f, search).value;
}

}  // namespace

ChartQuality chart_quality(const SmoothSystem& system, const OrbitSplitting& orbit, const AdaptedNormParams& p,
                           const ChartQualityOptions& o) {
  const int n_terms = p.max_terms;
  const int first = n_terms;
  const int count = o.samples + 1;
  if (first + count + n_terms >= orbit.size()) {
    std::ostringstream os;
    os << "chart_quality: orbit of " << orbit.size() << " points is too short for " << o.samples
       << " samples with " << n_terms << " terms on each side";
    throw InputError(os.str());
  }
  const auto& space = system.space;
  const double rate = p.lambda0 - p.delta0;
  ChartQuality q;
  for (int s = 0; s < count; ++s) {
    const int i = first + s;
    const auto iu = static_cast<std::size_t>(i);
    const Matrix& u = orbit.unstable[iu];
    const Matrix& st = orbit.stable[iu];
    double cu = u.cols() > 0 ? 1.0 : 0.0;
    Matrix y = u;
    for (int n = 1; n <= n_terms && u.cols() > 0; ++n) {
      const auto j = static_cast<std::size_t>(i - n);
      const Matrix img = orbit.history.derivatives[j].apply(orbit.unstable[j]);
      y = orbit.unstable[j] * img.colPivHouseholderQr().solve(y);
      const double val = sup_ratio(space, y, u, o.search) * std::exp(n * rate);
      cu = std::max(cu, val);
      if (n > 20 && val < 1e-6 * cu) break;
    }
    double cs = st.cols() > 0 ? 1.0 : 0.0;
    Matrix z = st;
    for (int n = 1; n <= n_terms && st.cols() > 0; ++n) {
      z = orbit.history.derivatives[static_cast<std::size_t>(i + n - 1)].apply(z);
      const double val = sup_ratio(space, z, st, o.search) * std::exp(n * rate);
      cs = std::max(cs, val);
      if (n > 20 && val < 1e-6 * cs) break;
    }
    const Matrix pu = orbit.projection_unstable(i);
    const Matrix ps = Matrix::Identity(pu.rows(), pu.cols()) - pu;
    const double npu = u.cols() > 0 ? space.operator_norm(pu) : 0.0;
    const double nps = st.cols() > 0 ? space.operator_norm(ps) : 0.0;
    q.indices.push_back(i);
    q.c_u.push_back(cu);
    q.c_s.push_back(cs);
    q.proj_u.push_back(npu);
    q.proj_s.push_back(nps);
    q.c.push_back(std::max({cu, cs, npu, nps}));
  }
  const double lead = std::max(27.0 * system.second_derivative_bound / (1.0 - std::exp(-p.delta0)), 1.0);
  for (int s = 0; s + 1 < count; ++s) q.l_tilde.push_back(lead * q.c[static_cast<std::size_t>(s + 1)] * q.c[static_cast<std::size_t>(s + 1)]);
  for (std::size_t s = 0; s + 1 < q.l_tilde.size(); ++s) {
    q.max_l_ratio = std::max(q.max_l_ratio, q.l_tilde[s + 1] / q.l_tilde[s]);
  }

  Rng rng(o.seed);
  const double el = std::exp(p.lambda);
  const double upper_factor = 3.0 / (1.0 - std::exp(-p.delta0));
  auto usable = [](const AdaptedNorm& a) { return a.tail_bound <= 0.01 * a.value; };
  for (int s = 0; s + 1 < count; ++s) {
    const int i = first + s;
    const auto iu = static_cast<std::size_t>(i);
    const LinearMap& df = orbit.history.derivatives[iu];
    for (int r = 0; r < o.probes; ++r) {
      if (orbit.m_u > 0) {
        const Vector u = orbit.unstable[iu] * rng.normal_vector(orbit.m_u);
        const auto a = adapted_norm(system, orbit, i, u, p);
        const auto b = adapted_norm(system, orbit, i + 1, df.apply(u), p);
        if (usable(a) && usable(b)) q.checks.check("one_step_unstable_expansion", el * a.value, b.value, 1e-9);
        else q.checks.add_vacuous("one_step_unstable_expansion", "truncation tail above 1% of the value");
      }
      if (orbit.stable[iu].cols() > 0) {
        const Vector w = orbit.stable[iu] * rng.normal_vector(orbit.stable[iu].cols());
        const auto a = adapted_norm(system, orbit, i, w, p);
        const auto b = adapted_norm(system, orbit, i + 1, df.apply(w), p);
        if (usable(a) && usable(b)) q.checks.check("one_step_stable_contraction", b.value, a.value / el, 1e-9);
        else q.checks.add_vacuous("one_step_stable_contraction", "truncation tail above 1% of the value");
      }
      const Vector v = rng.normal_vector(system.dim());
      const double nv = space.norm(v);
      const auto a = adapted_norm(system, orbit, i, v, p);
      if (usable(a)) {
        q.checks.check("adapted_norm_lower", nv / 3.0, a.value, 1e-9);
        const double c = q.c[static_cast<std::size_t>(s)];
        q.checks.check("adapted_norm_upper", a.value, upper_factor * c * c * nv, 1e-9);
      } else {
        q.checks.add_vacuous("adapted_norm_lower", "truncation tail above 1% of the value");
        q.checks.add_vacuous("adapted_norm_upper", "truncation tail above 1% of the value");
      }
    }
  }
  q.checks.constants.push_back({"max_l_tilde_ratio", q.max_l_ratio});
  q.checks.constants.push_back({"exp_delta2", std::exp(p.delta2)});
  return q;
}

json ChartQuality::to_json() const {
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(json_number(x));
    return a;
  };
  return {{"indices", indices},  {"c_u", arr(c_u)},         {"c_c", arr(std::vector<double>(c_u.size(), 0.0))},
          {"c_s", arr(c_s)},     {"proj_u", arr(proj_u)},   {"proj_s", arr(proj_s)},
          {"c", arr(c)},         {"l_tilde", arr(l_tilde)}, {"max_l_tilde_ratio", json_number(max_l_ratio)},
          {"checks", checks.to_json()}};
}

}  // namespace srbvol
