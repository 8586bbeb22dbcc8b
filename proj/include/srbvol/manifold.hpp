#pragma once

#include "srbvol/bounds.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/random.hpp"
#include "srbvol/systems.hpp"
#include "srbvol/volume.hpp"

#include <vector>

namespace srbvol {

/// Chart at a base point: p = base + U a + S b with a in E^u coordinates and
/// b in E^s coordinates.
struct ChartFrame {
  Vector base;
  Matrix unstable;
  Matrix stable;
  Matrix inverse;  // [U S]^{-1}

  static ChartFrame make(Vector base, Matrix unstable, Matrix stable);
  int m_u() const { return static_cast<int>(unstable.cols()); }
  int m_s() const { return static_cast<int>(stable.cols()); }
  /// Coordinates (a, b) of an ambient displacement.
  std::pair<Vector, Vector> coords(const Vector& displacement) const;
};

ChartFrame chart_at(const OrbitSplitting& orbit, int index);

struct LeafGrid {
  int nodes = 65;       // per axis, odd so that a = 0 is a node
  double radius = 0.5;  // half-width of the u-domain
};

/// Graph b = g(a) over the square [-r, r]^{m_u} (m_u <= 2), stored on a
/// uniform grid. Between nodes g is the tensor cubic Hermite interpolant
/// whose node slopes are the centred (one-sided at the border) differences.
class LeafGraph {
 public:
  LeafGraph(ChartFrame chart, LeafGrid grid);

  const ChartFrame& chart() const { return chart_; }
  const LeafGrid& grid() const { return grid_; }
  int m_u() const { return chart_.m_u(); }
  int size() const { return static_cast<int>(values_.size()); }
  double spacing() const { return 2.0 * grid_.radius / (grid_.nodes - 1); }
  /// Index of the node a = 0.
  int center() const;

  Vector node(int j) const;
  const Vector& value(int j) const { return values_[static_cast<std::size_t>(j)]; }
  void set_value(int j, Vector b) { values_[static_cast<std::size_t>(j)] = std::move(b); }
  /// Finite-difference slope dg at node j (m_s x m_u).
  Matrix slope(int j) const;

  bool contains(const Vector& a, double slack = 1e-9) const;
  Vector eval(const Vector& a) const;
  Matrix eval_derivative(const Vector& a) const;
  Vector offset(const Vector& a) const;   // U a + S g(a)
  Matrix tangent(const Vector& a) const;  // U + S dg(a)
  Vector point(const SmoothSystem& system, const Vector& a) const;

  /// max |S (g_i - g_j)| / |U (a_i - a_j)| over neighbouring nodes.
  double lipschitz(const NormedSpace& space) const;
  /// max over nodes of |S (g - g')|; both graphs must share chart and grid.
  double sup_distance(const LeafGraph& other, const NormedSpace& space) const;

 private:
  struct Weights {
    std::vector<int> idx;
    std::vector<double> w, dw;
  };
  Weights axis_weights(double a) const;
  Matrix fd_slope_axis(int j, int axis) const;

  ChartFrame chart_;
  LeafGrid grid_;
  std::vector<Vector> values_;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iterations = 50;
};

/// Chart-to-chart map a -> (a', b') of the leaf point at a.
std::pair<Vector, Vector> leaf_image(const SmoothSystem& system, const LeafGraph& source,
                                     const ChartFrame& target, const Vector& a);

/// Source parameter whose image has u-coordinate `target_u` (Newton with a
/// bisection safeguard for m_u = 1, damped Newton for m_u = 2).
Vector leaf_preimage(const SmoothSystem& system, const LeafGraph& source, const ChartFrame& target,
                     const Vector& target_u, const Vector& guess, long node, const NewtonOptions& options = {});

struct TransformResult {
  LeafGraph leaf;
  std::vector<Vector> preimages;  // source parameter of every target node
};

/// One graph transform from the chart of `source` to `target`.
TransformResult graph_transform_step(const SmoothSystem& system, const LeafGraph& source,
                                     const ChartFrame& target, const NewtonOptions& options = {});

struct ManifoldOptions {
  LeafGrid grid;
  double tol = 1e-10;     // sup distance between depth n and n + window
  int start_depth = 10;
  int window = 5;
  int min_depth = 0;      // final chain depth is at least this
  int max_depth = 200;
  NewtonOptions newton;
};

struct UnstableManifold {
  int index = 0;  // orbit index of the base point x_0
  int depth = 0;
  /// leaves[d] is the graph at orbit index `index - d`; leaves[depth] is flat.
  std::vector<LeafGraph> leaves;
  /// preimages[d][j]: parameter on leaves[d + 1] of node j of leaves[d].
  std::vector<std::vector<Vector>> preimages;
  std::vector<double> convergence;  // sup distances between successive depths

  const LeafGraph& leaf() const { return leaves.front(); }
};

/// Transforms the flat graph at x_{-n} along the orbit up to x_0, growing n
/// by `window` until successive results agree to `tol`.
UnstableManifold local_unstable_manifold(const SmoothSystem& system, const OrbitSplitting& orbit, int index,
                                         const ManifoldOptions& options = {});

struct LeafCheckOptions {
  double chart_delta = 0.25;  // allowed Lip(f~ - df~_0) in adapted norms
  int random_pairs = 64;
  std::uint64_t seed = 3;
};

/// Lip(g) <= 1/10, one-step invariance residual, nonlinearity of the chart
/// map and the expansion |f~z1 - f~z2|' >= (e^lambda - delta)|z1 - z2|'.
BoundReport leaf_checks(const SmoothSystem& system, const OrbitSplitting& orbit, const UnstableManifold& manifold,
                        const AdaptedNormParams& params, const LeafCheckOptions& options = {});

/// Ratio sup|Psi g1 - Psi g2| / sup|g1 - g2| for two random graphs with
/// g(0) = 0 and Lip <= 1/10 at orbit index `index - 1`.
double transform_contraction(const SmoothSystem& system, const OrbitSplitting& orbit, int index,
                             const LeafGrid& grid, Rng& rng);

/// Independent oracle for m_u = 1: bisection over the flat segment at
/// x_{-depth} for the point whose depth-fold image has u-coordinate a at
/// x_0; returns that image's stable coordinates.
Vector shooting_point(const SmoothSystem& system, const OrbitSplitting& orbit, int index, int depth, double a);

struct LeafVolumeOptions {
  int gauss_points = 8;  // per cell and axis
  MonteCarloOptions mc;  // m_u = 2 only
};

/// nu(region) for the box region lo <= a <= hi (componentwise).
VolumeEstimate leaf_volume(const SmoothSystem& system, const LeafGraph& leaf, const Vector& lo, const Vector& hi,
                           const LeafVolumeOptions& options = {});

/// integral over the region of f(a) d nu, for m_u = 1 (Gauss-Legendre on
/// grid cells; std_error compares n and n/2 point rules).
VolumeEstimate leaf_integral(const SmoothSystem& system, const LeafGraph& leaf, double lo, double hi,
                             const std::function<double(double)>& density, int gauss_points = 8);

/// log J^u at parameter a of `leaf`: log(|df t| / |t|) for the leaf tangent t.
double log_unstable_jacobian(const SmoothSystem& system, const LeafGraph& leaf, double a);

struct ChangeOfVariables {
  double lo = 0.0, hi = 0.0;              // region R on the leaf at x_{-1}
  double image_lo = 0.0, image_hi = 0.0;  // u-interval of f(R) on the leaf at x_0
  double image_volume = 0.0;              // nu(f(R))
  double jacobian_integral = 0.0;         // integral over R of J^u d nu
  double sigma = 0.0;                     // quadrature and interpolation error
};

/// Both sides of nu(f(R)) = int_R J^u d nu for R = [lo, hi] on leaves[1]
/// (m_u = 1). `refined`, when given, is the same manifold on a grid with
/// twice the resolution; its sides are reported and the L1 distance between
/// the coarse and refined integrands enters sigma.
ChangeOfVariables change_of_variables(const SmoothSystem& system, const UnstableManifold& manifold,
                                      const UnstableManifold* refined, double lo, double hi,
                                      int gauss_points = 8);

struct DistortionTable {
  std::vector<Vector> nodes;             // u-coordinates at x_0
  std::vector<Vector> points;            // ambient leaf points
  std::vector<double> log_delta;         // log Delta(x', y) estimate
  std::vector<double> tail_bound;        // per node bound on the omitted terms
  std::vector<double> log_ju;            // log J^u at the node
  std::vector<std::vector<double>> partial;  // partial[N-1][j] = log Delta_N
  std::vector<double> tail_sums;         // max_y sum_{k > N} |increment|
  int terms = 0;
  double rho = 0.0;        // fitted geometric rate of the tail sums
  double r_squared = 1.0;
  int fit_points = 0;
  /// max |log J^u(interpolated lineage point) - log J^u(f(deeper point))|.
  double noise = 0.0;
  double fit_floor = 0.0;  // tail sums at or below this are left out of the fit
  double lipschitz = 0.0;  // of log Delta over node pairs

  json to_json() const;
};

struct DistortionOptions {
  int max_terms = 60;
  double tol = 1e-13;
};

/// log Delta_N(x', y) = sum_{k <= N} [log J^u(f^{-k} x') - log J^u(f^{-k} y)]
/// with x' the base point; preimages follow the transform lineage and
/// tangents are pushed forward from the flat leaf at the bottom of the chain.
DistortionTable distortion_table(const SmoothSystem& system, const UnstableManifold& manifold,
                                 const OrbitSplitting& orbit, const DistortionOptions& options = {});

}  // namespace srbvol
