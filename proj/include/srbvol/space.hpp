#pragma once

#include "srbvol/search.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>

namespace srbvol {

using json = nlohmann::json;

enum class NormKind { lp, weighted_sup, weighted_l1, custom_polytope };

const char* to_string(NormKind kind);

/// Coordinate space R^D together with the norm |.| used for every volume,
/// distance and operator-norm computation in the library.
class NormedSpace {
 public:
  /// p may be std::numeric_limits<double>::infinity().
  static NormedSpace lp(int dim, double p);
  static NormedSpace weighted_sup(Vector weights);
  static NormedSpace weighted_l1(Vector weights);
  /// Norm max_i |<a_i, x>| for facet rows a_i; the rows must span R^D.
  static NormedSpace polytope(Matrix facets);

  /// {"dim": D, "norm": {"kind": "lp", "p": 2 | "inf"}} and the weighted /
  /// polytope variants with "weights" or "facets".
  static NormedSpace from_json(const json& j);
  /// Compact form used on the command line: "lp:inf:2", "lp:1.5:3",
  /// "wsup:1,0.5", "wl1:1,2", "poly:1,0;0,1;1,1".
  static NormedSpace parse(const std::string& text);

  int dim() const { return dim_; }
  NormKind kind() const { return kind_; }
  double p() const { return p_; }
  const Vector& weights() const { return weights_; }
  const Matrix& facets() const { return facets_; }

  double norm(const Eigen::Ref<const Vector>& v) const;

  /// Operator norm of A : (R^D, |.|) -> (R^D, |.|). Closed forms for
  /// l1, l2, l-inf and the weighted norms; sphere search otherwise.
  double operator_norm(const Matrix& a) const;

  /// Constants (a, b) with |x| <= a |x|_2 and |x|_2 <= b |x|.
  std::pair<double, double> euclidean_equivalence() const;

  json to_json() const;
  std::string describe() const;

 private:
  NormedSpace() = default;
  double eval(const double* v) const;

  int dim_ = 0;
  NormKind kind_ = NormKind::lp;
  double p_ = 2.0;
  Vector weights_;
  Matrix facets_;
};

/// Ordered basis v_1..v_k of a subspace E of the ambient space.
class Frame {
 public:
  static constexpr double kDefaultRankTol = 1e-10;

  Frame(NormedSpace space, Matrix basis, double rank_tol = kDefaultRankTol);

  const NormedSpace& space() const { return space_; }
  const Matrix& basis() const { return basis_; }
  int k() const { return static_cast<int>(basis_.cols()); }
  int dim() const { return static_cast<int>(basis_.rows()); }
  Vector vec(int i) const { return basis_.col(i); }

  Vector point(const Vector& coords) const { return basis_ * coords; }
  double coord_norm(const Vector& coords) const { return space_.norm(basis_ * coords); }

  /// Same span, every basis vector rescaled to |v_i| = 1.
  Frame normalized() const;
  /// Same span, Euclidean-orthonormal basis.
  Frame orthonormalized() const;

  static bool is_independent(const Matrix& basis, double rank_tol = kDefaultRankTol);

 private:
  NormedSpace space_;
  Matrix basis_;
};

enum class ScaleMode { john_raw, volume_matched };

const char* to_string(ScaleMode mode);

/// Inner product (c, c') = c^T gram c' on frame coordinates.
struct InnerProductModel {
  Frame frame;
  Matrix gram;
  ScaleMode scale_mode = ScaleMode::john_raw;
  double mvee_tol = 0.0;
  long iterations = 0;

  double gram_norm(const Vector& coords) const {
    return std::sqrt(coords.dot(gram * coords));
  }
  /// Lebesgue volume in frame coordinates of the gram unit ball.
  double gram_ball_volume() const;
};

/// Volume of the Euclidean unit ball in R^k.
double unit_ball_volume(int k);

/// Centered minimum-volume enclosing ellipsoid {x : x^T M x <= 1} of the
/// symmetric set {+-points[:, j]} (Khachiyan iteration with away steps).
/// Throws ConvergenceError when `max_iterations` is exhausted.
struct MveeResult {
  Matrix shape;  // M
  long iterations = 0;
};
MveeResult mvee_centered(const Matrix& points, double tol, long max_iterations = 200000);

/// Sampling directions used by john_model (deterministic).
int default_john_directions(int k);

InnerProductModel john_model(const Frame& frame, int n_dirs = -1, double eps_mvee = 1e-3);

InnerProductModel volume_matched_model(const InnerProductModel& model, double ball_vol);

}  // namespace srbvol
