#include "srbvol/geometry.hpp"

#include "srbvol/error.hpp"

#include <cmath>

namespace srbvol {

namespace {

SphereSearchOptions outer_search(const GeometryOptions& o) {
  SphereSearchOptions s;
  s.grid = o.outer_grid;
  s.candidates = o.candidates;
  s.polish_steps = o.polish_steps;
  s.seed = o.seed;
  return s;
}

SphereSearchOptions inner_search(const GeometryOptions& o) {
  SphereSearchOptions s;
  s.grid = o.inner_grid;
  s.candidates = std::max(2, o.candidates / 2);
  s.polish_steps = o.polish_steps;
  s.seed = o.seed + 1;
  return s;
}

bool is_euclidean(const NormedSpace& space) {
  return space.kind() == NormKind::lp && space.p() == 2.0;
}

// Unit vector of E with frame coordinates proportional to c.
Vector unit_point(const Frame& e, const Vector& c) {
  Vector x = e.point(c);
  return x / e.space().norm(x);
}

void require_low_dim(const Frame& f, const char* who) {
  if (f.k() > 3) {
    throw UnsupportedDimensionError(std::string(who) +
                                    ": sphere search over subspaces with k > 3 is not supported");
  }
}

}  // namespace

double distance_to_subspace(const Vector& x, const Frame& f) {
  const Matrix& v = f.basis();
  const Vector c0 = v.colPivHouseholderQr().solve(x);
  if (is_euclidean(f.space())) return (x - v * c0).norm();
  const double col = v.colwise().norm().minCoeff();
  const double scale = 0.5 * x.norm() / col + 1e-12;
  auto obj = [&](const Vector& c) { return f.space().norm(x - v * c); };
  return minimize_convex(obj, c0, scale, 1e-10).value;
}

double distance_to_unit_sphere(const Vector& x, const Frame& f, const GeometryOptions& options) {
  const NormedSpace& space = f.space();
  if (f.k() == 1) {
    const Vector u = f.vec(0) / space.norm(f.vec(0));
    return std::min(space.norm(x - u), space.norm(x + u));
  }
  auto obj = [&](const Vector& c) { return space.norm(x - unit_point(f, c)); };
  return minimize_on_sphere(f.k(), obj, inner_search(options)).value;
}

namespace {

double sup_distance(const Frame& a, const Frame& b, bool to_sphere, const GeometryOptions& options) {
  auto obj = [&](const Vector& c) {
    const Vector u = unit_point(a, c);
    return to_sphere ? distance_to_unit_sphere(u, b, options) : distance_to_subspace(u, b);
  };
  return maximize_on_sphere(a.k(), obj, outer_search(options)).value;
}

void require_pair(const Frame& e, const Frame& e2, const char* who) {
  require_low_dim(e, who);
  require_low_dim(e2, who);
  if (e.dim() != e2.dim()) throw InputError(std::string(who) + ": ambient dimensions differ");
}

}  // namespace

GapDistances gap_distances(const Frame& e, const Frame& e2, const GeometryOptions& options) {
  require_pair(e, e2, "gap_distances");
  GapDistances out;
  out.delta_a = std::max(sup_distance(e, e2, false, options), sup_distance(e2, e, false, options));
  out.d_h = std::max(sup_distance(e, e2, true, options), sup_distance(e2, e, true, options));
  return out;
}

double hausdorff_distance(const Frame& e, const Frame& e2, const GeometryOptions& options) {
  require_pair(e, e2, "hausdorff_distance");
  return std::max(sup_distance(e, e2, true, options), sup_distance(e2, e, true, options));
}

double angle(const Frame& e, const Frame& f, const GeometryOptions& options) {
  auto obj = [&](const Vector& c) { return distance_to_subspace(unit_point(e, c), f); };
  return minimize_on_sphere(e.k(), obj, outer_search(options)).value;
}

Matrix projection_matrix(const Frame& e, const Frame& f) {
  const int d = e.dim();
  if (f.dim() != d || e.k() + f.k() != d) {
    throw SplittingError("projection_matrix: dimensions of E and F do not add up to the ambient dimension");
  }
  Matrix m(d, d);
  m << e.basis(), f.basis();
  if (!Frame::is_independent(m)) throw SplittingError("projection_matrix: E and F intersect");
  Matrix sel = Matrix::Zero(d, d);
  sel.leftCols(e.k()) = e.basis();
  return sel * m.inverse();
}

double restricted_norm(const Matrix& p, const Frame& e, const GeometryOptions& options) {
  const NormedSpace& space = e.space();
  if (e.k() == 1) return space.norm(p * e.vec(0)) / space.norm(e.vec(0));
  auto obj = [&](const Vector& c) {
    const Vector x = e.point(c);
    return space.norm(p * x) / space.norm(x);
  };
  return maximize_on_sphere(e.k(), obj, outer_search(options)).value;
}

double restricted_min(const Matrix& p, const Frame& e, const GeometryOptions& options) {
  const NormedSpace& space = e.space();
  if (e.k() == 1) return space.norm(p * e.vec(0)) / space.norm(e.vec(0));
  auto obj = [&](const Vector& c) {
    const Vector x = e.point(c);
    return space.norm(p * x) / space.norm(x);
  };
  return minimize_on_sphere(e.k(), obj, outer_search(options)).value;
}

Splitting projection_and_angle(const Frame& e, const Frame& f, bool both_ways,
                               const GeometryOptions& options) {
  Matrix p = projection_matrix(e, f);
  const double pn = e.space().operator_norm(p);
  Splitting s{e, f, std::move(p), pn, angle(e, f, options), std::nullopt};
  if (both_ways) s.reverse_angle = angle(f, e, options);
  return s;
}

Splitting complement(const Frame& e, const GeometryOptions& options) {
  const int d = e.dim();
  if (e.k() >= d) throw InputError("complement: E already fills the ambient space");
  const Frame whole(e.space(), Matrix::Identity(d, d));
  const auto model = john_model(whole);
  // Columns orthogonal (Euclidean) to G E are G-orthogonal to E.
  const Matrix ge = model.gram * e.basis();
  Eigen::HouseholderQR<Matrix> qr(ge);
  const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Frame f(e.space(), q.rightCols(d - e.k()));
  return projection_and_angle(e, f, true, options);
}

BoundReport check_splitting(const Splitting& s, const GeometryOptions& options) {
  BoundReport r;
  const double prod = s.angle * s.proj_norm;
  r.check("angle_times_projection_norm_upper", prod, 1.0, 2 * options.rel_tol);
  r.check("angle_times_projection_norm_lower", 1.0, prod, 2 * options.rel_tol);
  if (s.reverse_angle) r.check("angle_asymmetry", s.angle, 2.0 * *s.reverse_angle, options.rel_tol);
  return r;
}

BoundReport check_perturbed_splitting(const Frame& e, const Frame& e2, const Frame& f,
                                      const GeometryOptions& options) {
  BoundReport r;
  const double tol = options.rel_tol;
  const double d = hausdorff_distance(e, e2, options);
  const Matrix p = projection_matrix(e, f);
  const double pn = e.space().operator_norm(p);
  const double sk = std::sqrt(static_cast<double>(e.k()));
  static const char* names[] = {"direct_sum_persists",          "perturbed_projection_norm",
                                "complement_projection_on_E",   "perturbed_projection_norm_sqrtk",
                                "complement_projection_on_E_sqrtk", "perturbed_projection_lower_sqrtk",
                                "perturbed_projection_upper_sqrtk"};
  if (d * pn >= 1.0) {
    for (const char* n : names) r.add_vacuous(n, "d_H(E,E') >= 1/|pi_{E+F}|");
    return r;
  }
  Matrix m(e.dim(), e.dim());
  m << e2.basis(), f.basis();
  auto& row = r.check(names[0], Frame::is_independent(m) ? 0.0 : 1.0, 0.0, 0.0, 0.0);
  row.note = "lhs 0 when E' + F is direct";
  if (!row.pass) return r;

  const Matrix p2 = projection_matrix(e2, f);
  const Matrix q2 = Matrix::Identity(e.dim(), e.dim()) - p2;
  const double pn2 = e.space().operator_norm(p2);
  const double q_on_e = restricted_norm(q2, e, options);
  r.check(names[1], pn2, pn / (1.0 - pn * d), tol);
  r.check(names[2], q_on_e, 2.0 * pn2 * d, tol);

  if (pn > sk || d > 1.0 / (2.0 * sk)) {
    for (int i = 3; i < 7; ++i) r.add_vacuous(names[i], "needs |pi_{E+F}| <= sqrt k and d_H <= 1/(2 sqrt k)");
    return r;
  }
  r.check(names[3], pn2, 2.0 * sk, tol);
  r.check(names[4], q_on_e, 4.0 * sk * d, tol);
  r.check(names[5], 1.0 - 4.0 * sk * d, restricted_min(p2, e, options), tol);
  r.check(names[6], restricted_norm(p2, e, options), 1.0 + 4.0 * sk * d, tol);
  return r;
}

}  // namespace srbvol
