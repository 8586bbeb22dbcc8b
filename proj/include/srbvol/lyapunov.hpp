#pragma once

#include "srbvol/bounds.hpp"
#include "srbvol/systems.hpp"
#include "srbvol/volume.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace srbvol {

/// Forward orbit read as a backward history: points[0] = x_{-n}, ...,
/// points[n] = x_0, with df cached at every point.
struct OrbitHistory {
  std::vector<Vector> points;
  std::vector<LinearMap> derivatives;

  int size() const { return static_cast<int>(points.size()); }
  /// max_i |f(points[i]) - points[i+1]|.
  double consistency_residual(const SmoothSystem& system) const;
};

/// Records `length` points starting at `start` (no burn-in is applied).
OrbitHistory make_history(const SmoothSystem& system, const Vector& start, int length);

struct LyapunovOptions {
  long n_steps = 100000;
  int k = -1;                // frame size; -1 = min(D, 4)
  int rebase_every = 1;
  std::uint64_t seed = 1;
  int max_restarts = 5;
  double merge_sigmas = 10.0;
  double merge_floor = 1e-9;
  double cond_limit = 1e6;   // forces a re-base before the frame degenerates
  int batches = 20;
  int trace_points = 64;
  // End-point volumes for 2 <= j < D; their error is divided by n_steps.
  MonteCarloOptions mc = [] {
    MonteCarloOptions m;
    m.target_rel_err = 1e-2;
    return m;
  }();
};

struct LyapunovReport {
  std::vector<double> sums;        // S_j, growth rate of j-volumes
  std::vector<double> sums_sigma;
  std::vector<double> exponents;   // S_j - S_{j-1}
  std::vector<double> sigma;
  std::vector<double> distinct;    // merged exponents, descending
  std::vector<int> multiplicities;
  Matrix unstable_basis;           // first m_u columns of the final frame
  int unstable_dim = 0;
  std::vector<long> trace_steps;
  std::vector<std::vector<double>> trace;  // trace[j][t]: running S_{j+1} at trace_steps[t]
  long n_steps = 0;
  int restarts = 0;
  long rebases = 0;

  json to_json() const;
};

/// Pushes a random k-frame along the orbit of x0 and accumulates
/// log det(df | span) through QR re-basing; the norm enters through the
/// induced volumes of the initial and final orthonormal frames.
LyapunovReport lyapunov_spectrum(const SmoothSystem& system, const Vector& x0,
                                 const LyapunovOptions& options = {});

struct UnstableFrameResult {
  Matrix basis;                 // Euclidean-orthonormal basis of E^u(x_0)
  double convergence_gap = 0.0;  // aperture between the n and n/2 pushes
  double invariance_residual = 0.0;
  std::vector<std::string> warnings;
};

struct UnstableFrameOptions {
  int warmup = 30;
  double gap_tol = 1e-8;
  std::uint64_t seed = 1;
};

UnstableFrameResult unstable_frame(const SmoothSystem& system, const OrbitHistory& history, int m_u,
                                   const UnstableFrameOptions& options = {});

/// Orbit window with the unstable and stable frames at every point. Frames
/// are computed on a longer orbit (`margin` extra points on each side) so
/// both are converged throughout the window. E^s is the Euclidean
/// orthogonal complement of the adjoint-pushed top m_u frame.
struct OrbitSplitting {
  OrbitHistory history;
  std::vector<Matrix> unstable;
  std::vector<Matrix> stable;
  int m_u = 0;

  int size() const { return history.size(); }
  /// Coordinates (a, b) of v = U a + S b at index i.
  std::pair<Vector, Vector> decompose(int i, const Vector& v) const;
  Matrix projection_unstable(int i) const;
};

OrbitSplitting split_orbit(const SmoothSystem& system, const Vector& start, int length, int m_u,
                           int margin = 80, std::uint64_t seed = 1);

struct AdaptedNormParams {
  double lambda0 = 0.0;
  double delta0 = 0.0;
  double lambda = 0.0;   // lambda0 - 2 delta0
  double delta2 = 0.0;
  int max_terms = 200;
  double rel_stop = 1e-12;

  /// lambda0 = min(smallest positive exponent, -largest negative exponent),
  /// delta0 = lambda0 / 20, delta2 = lambda / (100 m_u).
  static AdaptedNormParams from_exponents(const std::vector<double>& exponents);
};

struct AdaptedNorm {
  double value = 0.0;       // max of the two partial sums
  double tail_bound = 0.0;  // bound on the omitted terms of the maximizing series
  double unstable = 0.0;
  double stable = 0.0;
  double unstable_tail = 0.0;
  double stable_tail = 0.0;
  int unstable_terms = 0;
  int stable_terms = 0;
  bool history_limited = false;
};

/// |v|'_x at history index i: backward series on the E^u part, forward
/// series on the E^s part. Throws DivergenceError when terms keep growing.
AdaptedNorm adapted_norm(const SmoothSystem& system, const OrbitSplitting& orbit, int i, const Vector& v,
                         const AdaptedNormParams& params);

struct ChartQuality {
  std::vector<int> indices;
  std::vector<double> c_u, c_s, proj_u, proj_s, c, l_tilde;
  double max_l_ratio = 0.0;  // max over consecutive samples of l(fx)/l(x)
  BoundReport checks;        // one-step hyperbolicity and norm comparison
  json to_json() const;
};

struct ChartQualityOptions {
  int samples = 20;
  int probes = 3;            // random u, w, p per sample
  std::uint64_t seed = 5;
  SphereSearchOptions search{256, 4, 40, 24, 1};
};

/// Constants along consecutive points indices[0], indices[0]+1, ...; the
/// orbit must extend max_terms points on both sides of the samples.
ChartQuality chart_quality(const SmoothSystem& system, const OrbitSplitting& orbit,
                           const AdaptedNormParams& params, const ChartQualityOptions& options = {});

}  // namespace srbvol
