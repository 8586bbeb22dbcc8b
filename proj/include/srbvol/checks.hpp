#pragma once

#include "srbvol/bounds.hpp"
#include "srbvol/geometry.hpp"
#include "srbvol/random.hpp"
#include "srbvol/volume.hpp"

#include <vector>

namespace srbvol {

/// l1, l2, l-inf and a weighted sup norm on R^dim.
std::vector<NormedSpace> default_battery_norms(int dim);

/// Random k-frame in R^dim with Euclidean condition number at most 10.
Matrix random_frame_matrix(int dim, int k, Rng& rng);

struct VolumeAxiomConfig {
  int cases = 200;
  int dim = 3;
  int max_k = 3;
  std::vector<NormedSpace> norms;  // empty: default_battery_norms(dim)
  MonteCarloOptions mc;
  std::uint64_t seed = 42;
  int workers = 1;
};

/// Scaling m_E(aP) = a^k m_E(P) and basis change by |det M|, alternating;
/// each row compares the log discrepancy against 3 combined standard errors.
BoundReport verify_volume_axioms(const VolumeAxiomConfig& config);

struct JohnSandwichConfig {
  int dim = 4;
  int max_k = 4;
  int vectors = 10000;
  double eps_mvee = 1e-3;
  std::vector<NormedSpace> norms;  // empty: default norms plus wl1 and a polytope
  std::uint64_t seed = 42;
};

/// (1/((1+eps) sqrt k)) ||v|| <= |v| <= (1+eps) sqrt k ||v|| on fresh vectors.
BoundReport verify_john_sandwich(const JohnSandwichConfig& config);

struct GeometryBatteryConfig {
  int pairs = 100;
  int dim = 3;
  std::vector<NormedSpace> norms;
  GeometryOptions geo;
  std::uint64_t seed = 42;
  int workers = 1;
};

/// delta_a <= d_H <= 2 delta_a, alpha |pi| = 1 and alpha(E,F) <= 2 alpha(F,E).
BoundReport verify_geometry_invariants(const GeometryBatteryConfig& config);

struct SubspaceBoundsConfig {
  int min_rows = 500;   // evaluated (non-vacuous) rows
  int dim = 3;
  int max_k = 3;
  std::vector<NormedSpace> norms;
  double c_k = 1000.0;  // stand-in for the unspecified dimensional constant
  double volume_lipschitz = 1000.0;
  double nbar_per_k = 4.0;  // orthogonality-defect cap N <= nbar_per_k * k
  double perturbation = 0.02;
  MonteCarloOptions mc;
  GeometryOptions geo;
  std::uint64_t seed = 42;
  int workers = 1;
};

/// Battery over the parallelepiped bound, the SVD sandwich, the split
/// sandwich, volume and determinant regularity and the perturbed-splitting
/// bounds. Fitted constants are reported as maxima over the sample.
BoundReport verify_subspace_bounds(const SubspaceBoundsConfig& config);

}  // namespace srbvol
