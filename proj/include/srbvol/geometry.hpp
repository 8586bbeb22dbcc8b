#pragma once

#include "srbvol/bounds.hpp"
#include "srbvol/space.hpp"

#include <optional>

namespace srbvol {

struct GeometryOptions {
  int outer_grid = 1024;   // sphere points for sup/inf over a unit sphere
  int inner_grid = 256;    // nested searches (distance to a unit sphere)
  int candidates = 6;
  int polish_steps = 60;
  double rel_tol = 1e-3;   // applied on the side a lower-bound search favours
  std::uint64_t seed = 1;
};

/// inf_{f in F} |x - f| (convex minimization over frame coordinates).
double distance_to_subspace(const Vector& x, const Frame& f);

/// inf_{f in F, |f| = 1} |x - f|.
double distance_to_unit_sphere(const Vector& x, const Frame& f,
                               const GeometryOptions& options = {});

struct GapDistances {
  double delta_a = 0.0;  // aperture
  double d_h = 0.0;      // Hausdorff distance of unit spheres
};

/// Throws UnsupportedDimensionError for k > 3.
GapDistances gap_distances(const Frame& e, const Frame& e2, const GeometryOptions& options = {});

/// d_H alone (skips the aperture searches).
double hausdorff_distance(const Frame& e, const Frame& e2, const GeometryOptions& options = {});

/// alpha(E, F) = inf{|e - f| : e in E, |e| = 1, f in F}.
double angle(const Frame& e, const Frame& f, const GeometryOptions& options = {});

/// Ambient matrix of the projection onto E along F. Throws SplittingError
/// unless E + F is a direct sum filling the ambient space.
Matrix projection_matrix(const Frame& e, const Frame& f);

/// sup_{x in E, x != 0} |P x| / |x| for an ambient matrix P.
double restricted_norm(const Matrix& p, const Frame& e, const GeometryOptions& options = {});
/// inf over the same set; used for lower bounds on |P e|.
double restricted_min(const Matrix& p, const Frame& e, const GeometryOptions& options = {});

struct Splitting {
  Frame e;
  Frame f;
  Matrix projection;   // pi_{E+F} onto E
  double proj_norm = 0.0;
  double angle = 0.0;  // alpha(E, F)
  std::optional<double> reverse_angle;  // alpha(F, E) when computed
};

Splitting projection_and_angle(const Frame& e, const Frame& f, bool both_ways = false,
                               const GeometryOptions& options = {});

/// Complement orthogonal for the ambient John inner product of the unit ball.
Splitting complement(const Frame& e, const GeometryOptions& options = {});

/// Checks for the splitting tests: alpha * |pi| = 1 and alpha(E,F) <= 2 alpha(F,E).
BoundReport check_splitting(const Splitting& s, const GeometryOptions& options = {});

/// Bounds for E' near E with the complement F kept fixed: persistence of the
/// direct sum, projection-norm growth, |pi_{F+E'}| on E, and (when
/// |pi_{E+F}| <= sqrt k and d_H <= 1/(2 sqrt k)) the sqrt k versions.
BoundReport check_perturbed_splitting(const Frame& e, const Frame& e2, const Frame& f,
                                      const GeometryOptions& options = {});

}  // namespace srbvol
