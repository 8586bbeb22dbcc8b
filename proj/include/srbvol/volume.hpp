#pragma once

#include "srbvol/linear_map.hpp"
#include "srbvol/space.hpp"

#include <cstdint>
#include <vector>

namespace srbvol {

enum class VolumeMethod { exact_1d, monte_carlo, closed_form };

const char* to_string(VolumeMethod method);

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  VolumeMethod method = VolumeMethod::closed_form;
  /// False when the sample cap stopped the run before target_rel_err.
  bool reached_target = true;

  double rel_error() const { return value > 0 ? std_error / value : 0.0; }
};

struct DetResult {
  double value = 0.0;
  double log_value = 0.0;
  double std_error_log = 0.0;
  long n_samples = 0;
  VolumeMethod method = VolumeMethod::closed_form;
  bool degenerate = false;
  bool reached_target = true;
};

struct MonteCarloOptions {
  std::uint64_t seed = 1;
  double target_rel_err = 1e-3;
  long batch_size = 1L << 15;
  long max_samples = 1L << 26;
  double acceptance_floor = 1e-6;
  double eps_mvee = 1e-3;
  int workers = 1;
};

/// Lebesgue volume in frame coordinates of {c : |sum c_i v_i| <= 1}:
/// 2/|v_1| for k = 1, rejection sampling from an inflated enclosing
/// ellipsoid for k >= 2.
VolumeEstimate unit_ball_coord_volume(const Frame& frame, const MonteCarloOptions& options = {});

/// m_E(P[v_1..v_k]) = omega_k / (coordinate volume of B_E).
VolumeEstimate induced_volume_parallelepiped(const Frame& frame,
                                             const MonteCarloOptions& options = {});

/// Sum over i of the norm of the projection onto <v_i> along the other
/// basis vectors (basis vectors normalized first).
double orthogonality_defect(const Frame& frame);

/// det(A|E) for E = span(frame). Exact when k = 1 or A E = E; otherwise the
/// ratio of two coordinate ball volumes estimated with common random numbers.
/// A rank-deficient image yields value 0 with `degenerate` set.
DetResult det_restricted(const LinearMap& a, const Frame& frame,
                         const MonteCarloOptions& options = {});

/// Coordinate ball volumes of several frames with the same k, sampled with
/// common random numbers; stops when the root-sum-square of the relative
/// errors reaches target_rel_err.
std::vector<VolumeEstimate> coupled_ball_volumes(const std::vector<const Frame*>& frames,
                                                 const MonteCarloOptions& options = {});

/// Ellipsoid envelope {c : c^T gram c <= scale^2} certified to contain the
/// coordinate unit ball of the frame.
struct BallEnvelope {
  Matrix gram;
  double scale = 1.0;
  double volume = 0.0;
  Matrix sampler;  // maps the Euclidean unit ball onto the envelope
};

BallEnvelope ball_envelope(const Frame& frame, double eps_mvee);

}  // namespace srbvol
