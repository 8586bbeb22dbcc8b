#include "srbvol/search.hpp"

#include "srbvol/error.hpp"
#include "srbvol/random.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace srbvol {

namespace {

double normal_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

// First primes, used to build the Kronecker generator sqrt(p) mod 1.
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Orthonormal basis of the tangent space of S^{k-1} at unit c.
Matrix tangent_basis(const Vector& c) {
  const auto k = c.size();
  Eigen::HouseholderQR<Matrix> qr(c);
  Matrix q = qr.householderQ();
  return q.rightCols(k - 1);
}

SphereOptimum polish(const ScalarField& f, Vector c, double value, double step,
                     int iterations) {
  const auto k = c.size();
  if (k == 1) return {c, value};
  // Sup-type norms produce exact plateaus; a few sideways moves along a tie
  // let the search walk off them instead of shrinking the step in place.
  constexpr int kMaxTies = 8;
  int ties = 0;
  Vector last_dir;
  for (int it = 0; it < iterations && step > 1e-11; ++it) {
    const Matrix t = tangent_basis(c);
    bool improved = false;
    Vector tie_point, tie_dir;
    for (Eigen::Index j = 0; j < t.cols() && !improved; ++j) {
      Vector dir = t.col(j);
      if (last_dir.size() == k && dir.dot(last_dir) < 0) dir = -dir;
      for (double sign : {1.0, -1.0}) {
        Vector trial = c + sign * step * dir;
        trial.normalize();
        const double v = f(trial);
        if (v > value) {
          last_dir = sign * dir;
          c = trial;
          value = v;
          improved = true;
          ties = 0;
          break;
        }
        if (tie_point.size() == 0 && v >= value - 1e-14 * std::abs(value)) {
          tie_point = trial;
          tie_dir = sign * dir;
        }
      }
    }
    if (improved) continue;
    if (tie_point.size() > 0 && ties < kMaxTies) {
      c = tie_point;
      last_dir = tie_dir;
      ++ties;
    } else {
      step *= 0.5;
      ties = 0;
    }
  }
  return {c, value};
}

}  // namespace

std::vector<Vector> sphere_points(int k, int n, bool with_axes) {
  if (k < 1) throw InputError("sphere_points: dimension must be positive");
  std::vector<Vector> pts;
  if (k == 1) {
    pts.push_back(Vector::Constant(1, 1.0));
    pts.push_back(Vector::Constant(1, -1.0));
    return pts;
  }
  pts.reserve(static_cast<std::size_t>(n + 2 * k));
  if (k == 2) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * M_PI * (i + 0.5) / n;
      Vector v(2);
      v << std::cos(a), std::sin(a);
      pts.push_back(v);
    }
  } else if (k == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * i;
      Vector v(3);
      v << r * std::cos(a), r * std::sin(a), z;
      pts.push_back(v);
    }
  } else {
    if (k > static_cast<int>(std::size(kPrimes))) {
      throw UnsupportedDimensionError("sphere_points: dimension above 16");
    }
    for (int i = 0; i < n; ++i) {
      Vector v(k);
      for (int d = 0; d < k; ++d) {
        const double alpha = std::sqrt(static_cast<double>(kPrimes[d]));
        double u = std::fmod(0.5 + (i + 1) * alpha, 1.0);
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        v[d] = normal_quantile(u);
      }
      pts.push_back(v.normalized());
    }
  }
  if (with_axes) {
    for (int d = 0; d < k; ++d) {
      pts.push_back(Vector::Unit(k, d));
      pts.push_back(-Vector::Unit(k, d));
    }
  }
  return pts;
}

SphereOptimum maximize_on_sphere(int k, const ScalarField& f,
                                 const SphereSearchOptions& options) {
  if (k < 1) throw InputError("maximize_on_sphere: dimension must be positive");
  std::vector<Vector> starts;
  double step = 0.3;
  if (k <= 3) {
    starts = sphere_points(k, options.grid);
    step = k == 2 ? 2.0 * M_PI / options.grid
                  : std::sqrt(4.0 * M_PI / options.grid);
  } else {
    Rng rng(mix_seed(options.seed, 0x5eed));
    starts = sphere_points(k, options.grid);
    for (int i = 0; i < options.multistart; ++i) starts.push_back(rng.unit_vector(k));
  }
  std::vector<double> values(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) values[i] = f(starts[i]);

  std::vector<std::size_t> order(starts.size());
  std::iota(order.begin(), order.end(), 0);
  const auto n_cand = std::min<std::size_t>(
      order.size(), static_cast<std::size_t>(k <= 3 ? options.candidates
                                                     : options.candidates + options.multistart / 4));
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(n_cand), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });

  SphereOptimum best{starts[order[0]], values[order[0]]};
  for (std::size_t c = 0; c < n_cand; ++c) {
    const auto idx = order[c];
    auto res = polish(f, starts[idx], values[idx], step, options.polish_steps);
    if (res.value > best.value) best = res;
  }
  return best;
}

SphereOptimum minimize_on_sphere(int k, const ScalarField& f,
                                 const SphereSearchOptions& options) {
  auto res = maximize_on_sphere(
      k, [&](const Vector& v) { return -f(v); }, options);
  res.value = -res.value;
  return res;
}

namespace {

ConvexOptimum golden_section(const ScalarField& f, double start, double scale,
                             double tol) {
  int evals = 0;
  auto g = [&](double t) {
    ++evals;
    return f(Vector::Constant(1, t));
  };
  double step = scale > 0 ? scale : 1.0;
  double a = start - step, b = start + step;
  double fa = g(a), fm = g(start), fb = g(b);
  // Expand until the middle point is below both ends (convexity).
  double m = start;
  for (int i = 0; i < 200 && !(fm <= fa && fm <= fb); ++i) {
    if (fa < fb) {
      b = m;
      fb = fm;
      m = a;
      fm = fa;
      step *= 2.0;
      a = m - step;
      fa = g(a);
    } else {
      a = m;
      fa = fm;
      m = b;
      fm = fb;
      step *= 2.0;
      b = m + step;
      fb = g(b);
    }
  }
  constexpr double r = 0.6180339887498949;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = g(x1), f2 = g(x2);
  const double width_tol = tol * std::max(1.0, std::abs(m));
  for (int i = 0; i < 400 && (b - a) > width_tol; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = g(x2);
    }
  }
  double best_t = f1 <= f2 ? x1 : x2;
  double best_v = std::min(f1, f2);
  if (fm < best_v) {
    best_v = fm;
    best_t = m;
  }
  return {Vector::Constant(1, best_t), best_v, evals};
}

ConvexOptimum nelder_mead(const ScalarField& f, const Vector& start,
                          double scale, double tol) {
  const auto n = start.size();
  int evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    return f(x);
  };
  Vector best = start;
  double best_v = eval(best);
  double size = scale > 0 ? scale : 1.0;
  for (int restart = 0; restart < 60; ++restart) {
    std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), best);
    std::vector<double> fv(static_cast<std::size_t>(n + 1), best_v);
    for (Eigen::Index i = 0; i < n; ++i) {
      // Rotate the initial simplex between restarts so kinks aligned with
      // the axes cannot trap every restart.
      Vector dir = Vector::Unit(n, i);
      if (restart % 2 == 1) {
        dir = Vector::Constant(n, -1.0 / std::sqrt(static_cast<double>(n)));
        dir[i] = 1.0;
        dir.normalize();
      }
      simplex[static_cast<std::size_t>(i + 1)] = best + size * dir;
      fv[static_cast<std::size_t>(i + 1)] = eval(simplex[static_cast<std::size_t>(i + 1)]);
    }
    for (int it = 0; it < 4000; ++it) {
      std::vector<std::size_t> idx(simplex.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
      std::vector<Vector> s2;
      std::vector<double> f2;
      for (auto i : idx) {
        s2.push_back(simplex[i]);
        f2.push_back(fv[i]);
      }
      simplex.swap(s2);
      fv.swap(f2);
      double diam = 0.0;
      for (std::size_t i = 1; i < simplex.size(); ++i) {
        diam = std::max(diam, (simplex[i] - simplex[0]).norm());
      }
      if (diam <= tol * std::max(1.0, simplex[0].norm())) break;
      Vector centroid = Vector::Zero(n);
      for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
      centroid /= static_cast<double>(n);
      const Vector& worst = simplex.back();
      Vector xr = centroid + (centroid - worst);
      double fr = eval(xr);
      if (fr < fv[0]) {
        Vector xe = centroid + 2.0 * (centroid - worst);
        double fe = eval(xe);
        if (fe < fr) {
          simplex.back() = xe;
          fv.back() = fe;
        } else {
          simplex.back() = xr;
          fv.back() = fr;
        }
      } else if (fr < fv[fv.size() - 2]) {
        simplex.back() = xr;
        fv.back() = fr;
      } else {
        const bool outside = fr < fv.back();
        Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid))
                            : Vector(centroid + 0.5 * (worst - centroid));
        double fc = eval(xc);
        if (fc < (outside ? fr : fv.back())) {
          simplex.back() = xc;
          fv.back() = fc;
        } else {
          for (std::size_t i = 1; i < simplex.size(); ++i) {
            simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
            fv[i] = eval(simplex[i]);
          }
        }
      }
    }
    std::size_t arg = static_cast<std::size_t>(
        std::min_element(fv.begin(), fv.end()) - fv.begin());
    const double gain = best_v - fv[arg];
    const double moved = (simplex[arg] - best).norm();
    if (fv[arg] < best_v) {
      best = simplex[arg];
      best_v = fv[arg];
    }
    if (gain <= 1e-15 * std::max(1.0, std::abs(best_v)) && restart >= 2) break;
    size = std::max(moved, 1e3 * tol * std::max(1.0, best.norm()));
  }
  return {best, best_v, evals};
}

}  // namespace

ConvexOptimum minimize_convex(const ScalarField& f, const Vector& start,
                              double scale, double tol) {
  if (start.size() == 0) {
    return {start, f(start), 1};
  }
  if (start.size() == 1) return golden_section(f, start[0], scale, tol);
  return nelder_mead(f, start, scale, tol);
}

}  // namespace srbvol
