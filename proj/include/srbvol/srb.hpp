#pragma once

#include "srbvol/bounds.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/manifold.hpp"

#include <optional>
#include <string>
#include <vector>

namespace srbvol {

/// Conditional density q = Delta(x', .) / int Delta d nu on a leaf (m_u = 1).
struct SRBDensityProfile {
  double radius = 0.0;
  std::vector<double> nodes;      // u-coordinates
  std::vector<double> log_delta;  // log Delta(x', node)
  std::vector<double> q;
  std::vector<double> q_error;    // from the distortion tail bounds and quadrature
  double normalization = 0.0;     // int Delta d nu over the leaf
  double normalization_error = 0.0;

  /// q at any a in [-radius, radius] (cubic Hermite in log Delta).
  double density(double a) const;
  json to_json() const;
};

SRBDensityProfile srb_density(const SmoothSystem& system, const LeafGraph& leaf, const DistortionTable& table,
                              int gauss_points = 8);

/// Predicted probability of each u-bin: int_bin q d nu (bins split [-r, r]
/// evenly).
std::vector<double> predicted_bin_masses(const SmoothSystem& system, const LeafGraph& leaf,
                                         const SRBDensityProfile& profile, int bins, int gauss_points = 8);

struct EmpiricalOptions {
  long n_orbit = 10'000'000;  // total points after burn-in, split over `orbits`
  int orbits = 4;
  long burn_in = 1000;
  double thickness = 0.003;   // stable half-width of the slab
  int bins = 64;
  long min_hits = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct EmpiricalConditional {
  std::vector<double> edges;
  std::vector<long> counts;
  std::vector<double> histogram;  // bin probabilities, sums to 1
  long n_points = 0;
  long hits = 0;
  double thickness = 0.0;
  std::vector<double> reference;  // predicted bin masses when supplied
  std::optional<double> l1;
  /// 3 sqrt(p_k / hits) per bin: multinomial noise scale.
  std::vector<double> noise;

  json to_json() const;
};

/// Histogram of the u-coordinates of orbit points inside the slab
/// |S (b - g(a))| <= thickness around `leaf`, projected along the chart's
/// stable frame. Throws InsufficientDataError below min_hits.
EmpiricalConditional empirical_conditional(const SmoothSystem& system, const LeafGraph& leaf,
                                           const EmpiricalOptions& options = {},
                                           const std::vector<double>* reference = nullptr);

/// Ratio form of the density transformation rule between the leaf at x_{-1}
/// and the leaf at x_0: q_{-1}(z')/q_{-1}(y') = q(z) J^u(z') / (q(y) J^u(y'))
/// with z' = f^{-1} z. Pairs run over every `stride`-th node against the
/// centre node.
BoundReport density_transport_check(const SmoothSystem& system, const UnstableManifold& current,
                                    const SRBDensityProfile& current_q, const UnstableManifold& previous,
                                    const SRBDensityProfile& previous_q, int stride = 4);

struct EntropyOptions {
  int orbit_length = 20000;
  int batches = 20;
  std::uint64_t seed = 1;
  double known_tol = 1e-3;
  double route_tol = 2e-3;
};

struct EntropyReport {
  int m_u = 0;
  double exponent_sum = 0.0;  // sum of the positive exponents with multiplicity
  double exponent_sigma = 0.0;
  double ju_average = 0.0;    // orbit average of log J^u
  double ju_sigma = 0.0;
  std::optional<double> known;
  bool srb = true;
  BoundReport rows;
  std::vector<std::string> notes;

  json to_json() const;
};

/// Compares the positive-exponent sum of `spectrum` with the orbit average of
/// log det(df | E^u) in the system norm and, when available, with the known
/// entropy. Not an entropy estimator.
EntropyReport entropy_formula_report(const SmoothSystem& system, const LyapunovReport& spectrum,
                                     const EntropyOptions& options = {});

}  // namespace srbvol
