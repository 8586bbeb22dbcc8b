#pragma once

#include "srbvol/bounds.hpp"
#include "srbvol/linear_map.hpp"
#include "srbvol/space.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace srbvol {

struct KnownAnswers {
  /// Full spectrum when known; `leading_exponents` holds the prefix known
  /// otherwise (e.g. only the base expansion of a perturbed system).
  std::vector<double> exponents;
  std::vector<double> leading_exponents;
  std::optional<double> entropy;
  /// Whether the natural invariant measure is an SRB measure (false for the
  /// Dirac measure of a hyperbolic fixed point).
  bool srb = true;
  std::string attractor;
};

/// A C^2 map of (R^D, |.|) with its derivative. Coordinates listed in
/// `periodic` are angles taken mod 2 pi; displacement() and translate()
/// handle the wrap so charts and finite differences never see the seam.
struct SmoothSystem {
  SmoothSystem(std::string kind_, json params_, NormedSpace space_)
      : kind(std::move(kind_)), params(std::move(params_)), space(std::move(space_)) {}

  std::string kind;
  json params;
  NormedSpace space;
  std::function<Vector(const Vector&)> map;
  std::function<LinearMap(const Vector&)> derivative;
  double second_derivative_bound = 0.0;  // M_0, in the norm of `space`
  bool invertible_on_attractor = true;
  std::vector<int> periodic;
  Vector initial_point;
  int burn_in = 1000;
  std::optional<KnownAnswers> known;

  int dim() const { return space.dim(); }
  Vector wrap(Vector x) const;
  /// Smallest representative of `to - from`.
  Vector displacement(const Vector& from, const Vector& to) const;
  Vector translate(const Vector& x, const Vector& v) const { return wrap(x + v); }

  /// Iterates `steps` times from x.
  Vector iterate(Vector x, long steps) const;
  /// initial_point after burn_in iterations.
  Vector attractor_point() const { return iterate(initial_point, burn_in); }
};

struct ProbeConfig {
  int points = 200;
  int directions = 4;
  int injectivity_points = 1500;
  /// Minimum of |f y - f y'| / |y - y'| over nearest image pairs.
  double injectivity_floor = 1e-3;
  std::uint64_t seed = 7;
};

/// Finite-difference check of df against (M_0/2) h^2 |v|^2 and the
/// nearest-image injectivity check on sampled attractor points.
BoundReport probe_system(const SmoothSystem& system, const ProbeConfig& config = {});

/// Throws InputError listing the failed probe rows.
void validate_system(const SmoothSystem& system, const ProbeConfig& probes = {});

/// Kinds: "solenoid" {base_factor, fiber_contraction, coupling},
/// "diag_linear" {diag}, "linear" {matrix}, "torus_linear" {matrix: integer,
/// det +-1, acting mod 2 pi}, "dissipative_galerkin" {dim, decay,
/// nonlinearity_eps, coupling, cap, diag}. `params` may carry "space" (JSON
/// object or compact string); every kind defaults to l-infinity. Runs the
/// probes and throws InputError when they fail.
SmoothSystem build_test_system(const std::string& kind, const json& params = json::object(),
                               const ProbeConfig& probes = {});

/// The two parsers below build without probing; call validate_system.
/// Compact command-line form: "solenoid", "solenoid:2,0.25,0.05",
/// "diag_linear:2,0.5", "linear:2,1;1,1", "torus_linear:2,1;1,1",
/// "dissipative_galerkin:16,0.8,0.01".
SmoothSystem parse_system(const std::string& text, const std::optional<NormedSpace>& space = {});
/// {"kind": ..., <params>, "space": ...}
SmoothSystem system_from_json(const json& j, const std::optional<NormedSpace>& space = {});

/// Upper bound for the Kuratowski seminorm: 0 for dense operators, the
/// largest tail magnitude for structured ones.
double kuratowski_bound(const LinearMap& a);

}  // namespace srbvol
