#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace srbvol {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ScalarField = std::function<double(const Vector&)>;

/// Deterministic, nearly uniform directions on the Euclidean sphere S^{k-1}:
/// evenly spaced angles for k = 2, a Fibonacci lattice for k = 3 and a
/// Kronecker sequence pushed through the normal quantile for k >= 4. The 2k
/// signed coordinate directions are appended when `with_axes` is set.
std::vector<Vector> sphere_points(int k, int n, bool with_axes = true);

struct SphereSearchOptions {
  int grid = 4096;        // low-discrepancy points, k <= 3
  int candidates = 8;     // best grid points that get polished
  int polish_steps = 80;  // compass iterations per candidate
  int multistart = 48;    // random starts when k >= 4
  std::uint64_t seed = 1;
};

struct SphereOptimum {
  Vector point;  // unit Euclidean vector in R^k
  double value = 0.0;
};

/// Grid-plus-polish maximization of f over S^{k-1}. The result is a lower
/// bound on the true supremum.
SphereOptimum maximize_on_sphere(int k, const ScalarField& f,
                                 const SphereSearchOptions& options = {});

SphereOptimum minimize_on_sphere(int k, const ScalarField& f,
                                 const SphereSearchOptions& options = {});

struct ConvexOptimum {
  Vector point;
  double value = 0.0;
  int evaluations = 0;
};

/// Derivative-free minimization of a convex (possibly nonsmooth) function on
/// R^n for small n: golden section for n = 1, restarted Nelder-Mead otherwise.
ConvexOptimum minimize_convex(const ScalarField& f, const Vector& start,
                              double scale, double tol = 1e-12);

}  // namespace srbvol
