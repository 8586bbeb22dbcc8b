#include "srbvol/systems.hpp"

#include "srbvol/error.hpp"
#include "srbvol/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace srbvol {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_angle(double t) {
  double r = std::fmod(t, kTwoPi);
  if (r < 0) r += kTwoPi;
  return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("invalid number '" + item + "' in system description");
    }
  }
  return out;
}

NormedSpace pick_space(const json& params, const std::optional<NormedSpace>& space, int dim) {
  if (space) {
    if (space->dim() != dim) {
      std::ostringstream os;
      os << "space dimension " << space->dim() << " does not match system dimension " << dim;
      throw InputError(os.str());
    }
    return *space;
  }
  if (params.contains("space")) {
    const json& s = params.at("space");
    NormedSpace out = s.is_string() ? NormedSpace::parse(s.get<std::string>()) : NormedSpace::from_json(s);
    return pick_space(json::object(), out, dim);
  }
  return NormedSpace::lp(dim, std::numeric_limits<double>::infinity());
}

double param(const json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  try {
    return p.at(key).get<double>();
  } catch (const json::exception&) {
    throw InputError(std::string("parameter '") + key + "' must be a number");
  }
}

std::vector<double> param_list(const json& p, const char* key) {
  std::vector<double> out;
  if (!p.contains(key)) return out;
  try {
    for (const auto& v : p.at(key)) out.push_back(v.get<double>());
  } catch (const json::exception&) {
    throw InputError(std::string("parameter '") + key + "' must be a list of numbers");
  }
  return out;
}

SmoothSystem make_solenoid(const json& p, const std::optional<NormedSpace>& space) {
  const double b = param(p, "base_factor", 2.0);
  const double lam = param(p, "fiber_contraction", 0.25);
  const double eps = param(p, "coupling", 0.05);
  if (b < 2.0 || b != std::floor(b)) throw InputError("solenoid: base_factor must be an integer >= 2");
  if (!(lam > 0.0 && lam < 1.0)) throw InputError("solenoid: fiber_contraction must lie in (0, 1)");
  if (!(eps > 0.0)) throw InputError("solenoid: coupling must be positive (the map is not injective otherwise)");
  // Preimages of a base point differ by 2 pi j / b; their fibre images are
  // 2 eps sin(pi j / b) / lam apart, the attractor is 2 eps / (1 - lam) wide.
  const double s = std::sin(M_PI / b);
  if (lam >= s / (1.0 + s)) {
    std::ostringstream os;
    os << "solenoid: fiber_contraction " << lam << " makes the map non-injective on the attractor (need < "
       << s / (1.0 + s) << ")";
    throw InputError(os.str());
  }

  SmoothSystem sys{"solenoid", {{"base_factor", b}, {"fiber_contraction", lam}, {"coupling", eps}},
                   pick_space(p, space, 3)};
  sys.map = [b, lam, eps](const Vector& x) {
    Vector y(3);
    y[0] = wrap_angle(b * x[0]);
    y[1] = lam * x[1] + eps * std::cos(x[0]);
    y[2] = lam * x[2] + eps * std::sin(x[0]);
    return y;
  };
  sys.derivative = [b, lam, eps](const Vector& x) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = b;
    m(1, 0) = -eps * std::sin(x[0]);
    m(2, 0) = eps * std::cos(x[0]);
    m(1, 1) = lam;
    m(2, 2) = lam;
    return LinearMap::dense(m);
  };
  const auto [a2, b2] = sys.space.euclidean_equivalence();
  sys.second_derivative_bound = a2 * eps * b2 * b2;
  sys.periodic = {0};
  sys.initial_point = Vector::Zero(3);
  sys.initial_point[0] = 0.7390851332151607;
  sys.burn_in = 200;
  KnownAnswers k;
  k.exponents = {std::log(b), std::log(lam), std::log(lam)};
  k.leading_exponents = {std::log(b)};
  k.entropy = std::log(b);
  std::ostringstream os;
  os << "solenoid attractor inside |z|_2 <= " << eps / (1.0 - lam) << "; SRB measure projects to Lebesgue in theta";
  k.attractor = os.str();
  sys.known = k;
  return sys;
}

SmoothSystem make_linear(const std::string& kind, const Matrix& a, const json& p,
                         const std::optional<NormedSpace>& space, bool torus = false) {
  const int d = static_cast<int>(a.rows());
  if (d < 1 || a.cols() != d) throw InputError(kind + ": matrix must be square and non-empty");
  if (!a.allFinite()) throw InputError(kind + ": matrix entries must be finite");
  if (std::abs(a.determinant()) < 1e-300) throw InputError(kind + ": singular matrix is not injective");
  if (torus) {
    if ((a.array() != a.array().round()).any()) throw InputError(kind + ": matrix entries must be integers");
    if (std::abs(std::abs(a.determinant()) - 1.0) > 1e-9) {
      throw InputError(kind + ": matrix must have determinant +-1 to act bijectively on the torus");
    }
  }
  json params = p;
  params.erase("space");
  SmoothSystem sys{kind, params, pick_space(p, space, d)};
  sys.derivative = [a](const Vector&) { return LinearMap::dense(a); };
  sys.second_derivative_bound = 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  std::vector<double> ex;
  for (Eigen::Index i = 0; i < d; ++i) ex.push_back(std::log(std::abs(es.eigenvalues()[i])));
  std::sort(ex.begin(), ex.end(), std::greater<>());
  KnownAnswers k;
  k.exponents = ex;
  k.leading_exponents = ex;
  if (torus) {
    for (int i = 0; i < d; ++i) sys.periodic.push_back(i);
    sys.map = [a](const Vector& x) {
      Vector y = a * x;
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = wrap_angle(y[i]);
      return y;
    };
    sys.initial_point = Vector::LinSpaced(d, 0.7390851332151607, 2.0 * 0.7390851332151607);
    sys.burn_in = 100;
    double h = 0.0;
    for (double e : ex) h += std::max(e, 0.0);
    k.entropy = h;
    k.srb = true;
    k.attractor = "whole torus; Lebesgue measure is invariant and is the SRB measure";
  } else {
    sys.map = [a](const Vector& x) { return Vector(a * x); };
    sys.initial_point = Vector::Zero(d);
    sys.burn_in = 0;
    k.entropy = 0.0;
    k.srb = false;
    k.attractor = "fixed point at the origin (Dirac measure; not an SRB measure when an exponent is positive)";
  }
  sys.known = k;
  return sys;
}

SmoothSystem make_galerkin(const json& p, const std::optional<NormedSpace>& space) {
  const double b = param(p, "base_factor", 2.0);
  const double decay = param(p, "decay", 0.8);
  const double eps = param(p, "nonlinearity_eps", 0.01);
  const double kappa = param(p, "coupling", 0.05);
  const double cap = param(p, "cap", 0.25);
  std::vector<double> diag = param_list(p, "diag");
  int d = static_cast<int>(param(p, "dim", diag.empty() ? 16 : static_cast<double>(diag.size())));
  if (!diag.empty()) {
    if (static_cast<int>(diag.size()) != d) throw InputError("dissipative_galerkin: diag length must equal dim");
  }
  if (d < 3 || d > 64) throw InputError("dissipative_galerkin: dim must lie in [3, 64]");
  if (!(eps >= 0.0)) throw InputError("dissipative_galerkin: nonlinearity_eps must be non-negative");
  if (!(kappa > 0.0)) throw InputError("dissipative_galerkin: coupling must be positive");
  Vector a(d);
  if (diag.empty()) {
    if (!(decay > 0.0 && decay < 1.0)) throw InputError("dissipative_galerkin: decay must lie in (0, 1)");
    if (!(cap > 0.0 && cap < 1.0)) throw InputError("dissipative_galerkin: cap must lie in (0, 1)");
    a[0] = b;
    for (int j = 1; j < d; ++j) a[j] = std::min(2.0 * std::pow(decay, j), cap);
  } else {
    for (int j = 0; j < d; ++j) a[j] = diag[static_cast<std::size_t>(j)];
  }
  const double base = a[0];
  if (base < 2.0 || base != std::floor(base)) {
    throw InputError("dissipative_galerkin: base factor (diag[0]) must be an integer >= 2");
  }
  const double amax = a.tail(d - 1).cwiseAbs().maxCoeff();
  if (!(amax < 1.0) || (a.tail(d - 1).array() == 0.0).any()) {
    throw InputError("dissipative_galerkin: mode factors must be non-zero with magnitude below 1");
  }

  json params = {{"dim", d}, {"nonlinearity_eps", eps}, {"coupling", kappa}};
  if (diag.empty()) {
    params["decay"] = decay;
    params["cap"] = cap;
    params["base_factor"] = b;
  } else {
    params["diag"] = diag;
  }
  SmoothSystem sys{"dissipative_galerkin", params, pick_space(p, space, d)};

  // Mode j (1 <= j < d) is x_j; x_0 is replaced by sin(theta) inside the
  // coupling and x_d := 0.
  auto neighbour = [d](const Vector& x, int j) {
    if (j == 0) return std::sin(x[0]);
    if (j >= d) return 0.0;
    return x[j];
  };
  sys.map = [a, d, eps, kappa, neighbour](const Vector& x) {
    Vector y(d);
    y[0] = wrap_angle(a[0] * x[0]);
    for (int j = 1; j < d; ++j) {
      double v = a[j] * x[j];
      if (j == 1) v += kappa * std::cos(x[0]);
      if (j == 2) v += kappa * std::sin(x[0]);
      v += eps * std::tanh(neighbour(x, j - 1) * neighbour(x, j + 1));
      y[j] = v;
    }
    return y;
  };
  sys.derivative = [a, d, eps, kappa, neighbour](const Vector& x) {
    Matrix m = Matrix::Zero(d, d);
    m(0, 0) = a[0];
    for (int j = 1; j < d; ++j) {
      m(j, j) = a[j];
      if (j == 1) m(j, 0) += -kappa * std::sin(x[0]);
      if (j == 2) m(j, 0) += kappa * std::cos(x[0]);
      if (eps == 0.0) continue;
      const double lo = neighbour(x, j - 1), hi = neighbour(x, j + 1);
      const double th = std::tanh(lo * hi);
      const double g = eps * (1.0 - th * th);
      if (j - 1 == 0) m(j, 0) += g * hi * std::cos(x[0]);
      else m(j, j - 1) += g * hi;
      if (j + 1 < d) m(j, j + 1) += g * lo;
    }
    // Modes from index 3 on keep only their diagonal outside the coupling
    // band, so the diagonal there is the non-compact tail.
    if (d <= 3) return LinearMap::dense(m);
    Vector tail = a.tail(d - 3);
    Matrix finite = m;
    for (int i = 3; i < d; ++i) finite(i, i) -= a[i];
    return LinearMap::structured(finite, tail);
  };
  const double radius = (kappa + eps) / (1.0 - amax);
  const double r1 = std::max(radius, 1.0);
  const double sup_bound = kappa + eps * (0.7698003589195010 * 4.0 * r1 * r1 + r1 + 2.0);
  const auto [a2, b2] = sys.space.euclidean_equivalence();
  sys.second_derivative_bound = a2 * std::sqrt(static_cast<double>(d)) * sup_bound * b2 * b2;
  sys.periodic = {0};
  sys.initial_point = Vector::Zero(d);
  sys.initial_point[0] = 0.7390851332151607;
  sys.burn_in = 300;
  KnownAnswers k;
  k.leading_exponents = {std::log(base)};
  if (eps == 0.0) {
    std::vector<double> ex;
    for (int j = 0; j < d; ++j) ex.push_back(std::log(std::abs(a[j])));
    std::sort(ex.begin(), ex.end(), std::greater<>());
    k.exponents = ex;
  }
  k.entropy = std::log(base);
  std::ostringstream os;
  os << "Galerkin solenoid: theta times " << base << ", modes bounded by " << radius << " in sup norm";
  k.attractor = os.str();
  sys.known = k;
  return sys;
}

}  // namespace

Vector SmoothSystem::wrap(Vector x) const {
  for (int i : periodic) x[i] = wrap_angle(x[i]);
  return x;
}

Vector SmoothSystem::displacement(const Vector& from, const Vector& to) const {
  Vector d = to - from;
  for (int i : periodic) d[i] = std::remainder(d[i], kTwoPi);
  return d;
}

Vector SmoothSystem::iterate(Vector x, long steps) const {
  for (long i = 0; i < steps; ++i) x = map(x);
  return x;
}

double kuratowski_bound(const LinearMap& a) {
  if (!a.is_structured()) return 0.0;
  return a.tail_diagonal.cwiseAbs().maxCoeff();
}

BoundReport probe_system(const SmoothSystem& sys, const ProbeConfig& config) {
  BoundReport report;
  const int d = sys.dim();
  Rng rng(config.seed);
  Vector x = sys.attractor_point();
  const double m0 = sys.second_derivative_bound;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    double worst_excess = -std::numeric_limits<double>::infinity();
    double lhs_at = 0.0, rhs_at = 0.0;
    Vector y = x;
    for (int i = 0; i < config.points; ++i) {
      y = sys.iterate(y, 3);
      const Vector fy = sys.map(y);
      const LinearMap df = sys.derivative(y);
      for (int k = 0; k < config.directions; ++k) {
        Vector v = rng.unit_vector(d);
        v /= sys.space.norm(v);
        const Vector step = sys.displacement(fy, sys.map(sys.translate(y, h * v)));
        const double lhs = sys.space.norm(step - h * df.apply(v));
        const double rhs = 0.5 * m0 * h * h + 1e-13 * (1.0 + sys.space.norm(fy));
        if (lhs - rhs > worst_excess) {
          worst_excess = lhs - rhs;
          lhs_at = lhs;
          rhs_at = rhs;
        }
      }
    }
    std::ostringstream name;
    name << "derivative_taylor_remainder_h" << h;
    report.check(name.str(), lhs_at, rhs_at, 0.0, 0.0).note = "worst probe";
  }

  const int n = config.injectivity_points;
  std::vector<Vector> pts, imgs;
  Vector y = x;
  for (int i = 0; i < n; ++i) {
    y = sys.iterate(y, 5);
    // Small off-orbit jitter keeps fixed-point attractors from producing only
    // coincident pairs.
    Vector p = sys.translate(y, 1e-3 * rng.normal_vector(d));
    pts.push_back(p);
    imgs.push_back(sys.map(p));
  }
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist = sys.space.norm(sys.displacement(imgs[i], imgs[j]));
      if (dist < best) {
        best = dist;
        arg = j;
      }
    }
    if (arg < 0) continue;
    const double pre = sys.space.norm(sys.displacement(pts[i], pts[arg]));
    if (pre < 1e-12) continue;
    min_ratio = std::min(min_ratio, best / pre);
  }
  if (std::isfinite(min_ratio)) {
    report.check("injectivity_nearest_image_ratio", config.injectivity_floor, min_ratio, 0.0, 0.0);
  } else {
    report.add_vacuous("injectivity_nearest_image_ratio", "no distinct sample pairs");
  }
  report.constants.push_back({"second_derivative_bound", m0});
  report.constants.push_back({"min_nearest_image_ratio", min_ratio});
  return report;
}

void validate_system(const SmoothSystem& sys, const ProbeConfig& probes) {
  const BoundReport r = probe_system(sys, probes);
  if (r.failures() == 0) return;
  std::ostringstream os;
  os << sys.kind << ": construction probes failed:";
  for (const auto& row : r.rows) {
    if (!row.vacuous && !row.pass) os << " " << row.statement << " (" << row.lhs << " > " << row.rhs << ")";
  }
  throw InputError(os.str());
}

SmoothSystem build_test_system(const std::string& kind, const json& params, const ProbeConfig& probes) {
  json j = params.is_object() ? params : json::object();
  j["kind"] = kind;
  SmoothSystem sys = system_from_json(j);
  validate_system(sys, probes);
  return sys;
}

SmoothSystem system_from_json(const json& j, const std::optional<NormedSpace>& space) {
  if (!j.is_object() || !j.contains("kind")) throw InputError("system config needs a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "solenoid") return make_solenoid(j, space);
  if (kind == "diag_linear") {
    const auto diag = param_list(j, "diag");
    if (diag.empty()) throw InputError("diag_linear: 'diag' is required");
    Vector v(static_cast<Eigen::Index>(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) v[static_cast<Eigen::Index>(i)] = diag[i];
    json p = j;
    p.erase("kind");
    return make_linear("diag_linear", v.asDiagonal().toDenseMatrix(), p, space);
  }
  if (kind == "linear" || kind == "torus_linear") {
    if (!j.contains("matrix")) throw InputError(kind + ": 'matrix' is required");
    const json& rows = j.at("matrix");
    if (!rows.is_array() || rows.empty()) throw InputError(kind + ": 'matrix' must be a list of rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw InputError(kind + ": ragged matrix");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
      }
    }
    json p = j;
    p.erase("kind");
    return make_linear(kind, m, p, space, kind == "torus_linear");
  }
  if (kind == "dissipative_galerkin" || kind == "galerkin") return make_galerkin(j, space);
  throw InputError("unknown system kind '" + kind + "'");
}

SmoothSystem parse_system(const std::string& text, const std::optional<NormedSpace>& space) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  json j = {{"kind", kind}};
  if (kind == "solenoid") {
    if (!rest.empty()) {
      const auto v = parse_numbers(rest);
      const char* keys[] = {"base_factor", "fiber_contraction", "coupling"};
      if (v.size() > 3) throw InputError("solenoid takes at most 3 parameters");
      for (std::size_t i = 0; i < v.size(); ++i) j[keys[i]] = v[i];
    }
  } else if (kind == "diag_linear") {
    if (rest.empty()) throw InputError("diag_linear needs diagonal entries, e.g. diag_linear:2,0.5");
    j["diag"] = parse_numbers(rest);
  } else if (kind == "linear" || kind == "torus_linear") {
    if (rest.empty()) throw InputError(kind + " needs matrix rows, e.g. " + kind + ":2,1;1,1");
    json rows = json::array();
    for (const auto& r : split(rest, ';')) rows.push_back(parse_numbers(r));
    j["matrix"] = rows;
  } else if (kind == "dissipative_galerkin" || kind == "galerkin") {
    if (!rest.empty()) {
      const auto v = parse_numbers(rest);
      const char* keys[] = {"dim", "decay", "nonlinearity_eps"};
      if (v.size() > 3) throw InputError("dissipative_galerkin takes at most 3 parameters");
      for (std::size_t i = 0; i < v.size(); ++i) j[keys[i]] = v[i];
    }
  } else {
    throw InputError("unknown system kind '" + kind + "'");
  }
  return system_from_json(j, space);
}

}  // namespace srbvol
