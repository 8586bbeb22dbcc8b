#include "srbvol/space.hpp"

#include "srbvol/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace srbvol {

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::lp: return "lp";
    case NormKind::weighted_sup: return "weighted_sup";
    case NormKind::weighted_l1: return "weighted_l1";
    case NormKind::custom_polytope: return "custom_polytope";
  }
  return "?";
}

const char* to_string(ScaleMode mode) {
  return mode == ScaleMode::john_raw ? "john_raw" : "volume_matched";
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::rank: return "rank";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::splitting: return "splitting";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::root_finding: return "root_finding";
    case ErrorKind::hyperbolicity: return "hyperbolicity";
    case ErrorKind::distortion: return "distortion";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::unsupported_dimension: return "unsupported_dimension";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// NormedSpace

NormedSpace NormedSpace::lp(int dim, double p) {
  if (dim < 1) throw InputError("lp: dimension must be positive");
  if (!(p >= 1.0)) throw InputError("lp: p must be >= 1");
  NormedSpace s;
  s.dim_ = dim;
  s.kind_ = NormKind::lp;
  s.p_ = p;
  return s;
}

NormedSpace NormedSpace::weighted_sup(Vector weights) {
  if (weights.size() < 1) throw InputError("weighted_sup: empty weights");
  if ((weights.array() <= 0.0).any()) {
    throw InputError("weighted_sup: weights must be strictly positive");
  }
  NormedSpace s;
  s.dim_ = static_cast<int>(weights.size());
  s.kind_ = NormKind::weighted_sup;
  s.p_ = std::numeric_limits<double>::infinity();
  s.weights_ = std::move(weights);
  return s;
}

NormedSpace NormedSpace::weighted_l1(Vector weights) {
  if (weights.size() < 1) throw InputError("weighted_l1: empty weights");
  if ((weights.array() <= 0.0).any()) {
    throw InputError("weighted_l1: weights must be strictly positive");
  }
  NormedSpace s;
  s.dim_ = static_cast<int>(weights.size());
  s.kind_ = NormKind::weighted_l1;
  s.p_ = 1.0;
  s.weights_ = std::move(weights);
  return s;
}

NormedSpace NormedSpace::polytope(Matrix facets) {
  if (facets.rows() < 1 || facets.cols() < 1) throw InputError("polytope: empty facet list");
  Eigen::JacobiSVD<Matrix> svd(facets);
  const auto& sv = svd.singularValues();
  if (sv.size() < facets.cols() || sv[sv.size() - 1] <= 1e-12 * sv[0]) {
    throw InputError("polytope: facet normals must span the space (bounded unit ball)");
  }
  NormedSpace s;
  s.dim_ = static_cast<int>(facets.cols());
  s.kind_ = NormKind::custom_polytope;
  s.facets_ = std::move(facets);
  return s;
}

double NormedSpace::eval(const double* v) const {
  switch (kind_) {
    case NormKind::lp: {
      if (std::isinf(p_)) {
        double m = 0.0;
        for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(v[i]));
        return m;
      }
      if (p_ == 1.0) {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += std::abs(v[i]);
        return s;
      }
      if (p_ == 2.0) {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += v[i] * v[i];
        return std::sqrt(s);
      }
      double m = 0.0;
      for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(v[i]));
      if (m == 0.0) return 0.0;
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += std::pow(std::abs(v[i]) / m, p_);
      return m * std::pow(s, 1.0 / p_);
    }
    case NormKind::weighted_sup: {
      double m = 0.0;
      for (int i = 0; i < dim_; ++i) m = std::max(m, weights_[i] * std::abs(v[i]));
      return m;
    }
    case NormKind::weighted_l1: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += weights_[i] * std::abs(v[i]);
      return s;
    }
    case NormKind::custom_polytope: {
      double m = 0.0;
      for (Eigen::Index r = 0; r < facets_.rows(); ++r) {
        double d = 0.0;
        for (int i = 0; i < dim_; ++i) d += facets_(r, i) * v[i];
        m = std::max(m, std::abs(d));
      }
      return m;
    }
  }
  return 0.0;
}

double NormedSpace::norm(const Eigen::Ref<const Vector>& v) const {
  if (v.size() != dim_) {
    std::ostringstream os;
    os << "norm: vector has length " << v.size() << ", space dimension is " << dim_;
    throw InputError(os.str());
  }
  return eval(v.data());
}

double NormedSpace::operator_norm(const Matrix& a) const {
  if (a.rows() != dim_ || a.cols() != dim_) throw InputError("operator_norm: shape mismatch");
  if (kind_ == NormKind::lp && std::isinf(p_)) return a.cwiseAbs().rowwise().sum().maxCoeff();
  if (kind_ == NormKind::lp && p_ == 1.0) return a.cwiseAbs().colwise().sum().maxCoeff();
  if (kind_ == NormKind::lp && p_ == 2.0) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()[0];
  }
  if (kind_ == NormKind::weighted_sup) {
    double best = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim_; ++j) s += std::abs(a(i, j)) / weights_[j];
      best = std::max(best, weights_[i] * s);
    }
    return best;
  }
  if (kind_ == NormKind::weighted_l1) {
    double best = 0.0;
    for (int j = 0; j < dim_; ++j) {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += weights_[i] * std::abs(a(i, j));
      best = std::max(best, s / weights_[j]);
    }
    return best;
  }
  auto ratio = [&](const Vector& x) { return norm(a * x) / norm(x); };
  return maximize_on_sphere(dim_, ratio).value;
}

std::pair<double, double> NormedSpace::euclidean_equivalence() const {
  const double d = dim_;
  switch (kind_) {
    case NormKind::lp:
      if (p_ >= 2.0) {
        const double e = std::isinf(p_) ? 0.5 : 0.5 - 1.0 / p_;
        return {1.0, std::pow(d, e)};
      }
      return {std::pow(d, 1.0 / p_ - 0.5), 1.0};
    case NormKind::weighted_sup:
      return {weights_.maxCoeff(), weights_.cwiseInverse().norm()};
    case NormKind::weighted_l1:
      return {weights_.norm(), weights_.cwiseInverse().maxCoeff()};
    case NormKind::custom_polytope: {
      const double a = facets_.rowwise().norm().maxCoeff();
      const double b = maximize_on_sphere(dim_, [&](const Vector& x) { return 1.0 / norm(x); }).value;
      return {a, b * (1.0 + 1e-3)};
    }
  }
  return {1.0, 1.0};
}

namespace {

Vector json_vector(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

double parse_p(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "Inf") return std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw InputError("invalid p value '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

Vector parse_list(const std::string& s) {
  auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      v[static_cast<Eigen::Index>(i)] = std::stod(parts[i]);
    } catch (const std::exception&) {
      throw InputError("invalid number '" + parts[i] + "'");
    }
  }
  return v;
}

}  // namespace

NormedSpace NormedSpace::from_json(const json& j) {
  try {
    const json& n = j.at("norm");
    const std::string kind = n.at("kind").get<std::string>();
    NormedSpace s;
    if (kind == "lp") {
      const json& pj = n.at("p");
      const double p = pj.is_string() ? parse_p(pj.get<std::string>()) : pj.get<double>();
      s = lp(j.at("dim").get<int>(), p);
    } else if (kind == "weighted_sup") {
      s = weighted_sup(json_vector(n.at("weights")));
    } else if (kind == "weighted_l1") {
      s = weighted_l1(json_vector(n.at("weights")));
    } else if (kind == "custom_polytope") {
      const json& f = n.at("facets");
      if (f.empty()) throw InputError("custom_polytope: empty facet list");
      Matrix m(static_cast<Eigen::Index>(f.size()), static_cast<Eigen::Index>(f[0].size()));
      for (std::size_t r = 0; r < f.size(); ++r) {
        if (f[r].size() != f[0].size()) throw InputError("custom_polytope: ragged facets");
        m.row(static_cast<Eigen::Index>(r)) = json_vector(f[r]).transpose();
      }
      s = polytope(std::move(m));
    } else {
      throw InputError("unknown norm kind '" + kind + "'");
    }
    if (j.contains("dim") && j.at("dim").get<int>() != s.dim()) {
      throw InputError("space config: dim does not match norm data");
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("space config: ") + e.what());
  }
}

NormedSpace NormedSpace::parse(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw InputError("empty space description");
  const std::string& kind = parts[0];
  if (kind == "lp") {
    if (parts.size() != 3) throw InputError("expected lp:<p>:<dim>, got '" + text + "'");
    int dim = 0;
    try {
      dim = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw InputError("invalid dimension in '" + text + "'");
    }
    return lp(dim, parse_p(parts[1]));
  }
  if (parts.size() != 2) throw InputError("malformed space description '" + text + "'");
  if (kind == "wsup") return weighted_sup(parse_list(parts[1]));
  if (kind == "wl1") return weighted_l1(parse_list(parts[1]));
  if (kind == "poly") {
    auto rows = split(parts[1], ';');
    std::vector<Vector> vs;
    for (const auto& r : rows) vs.push_back(parse_list(r));
    Matrix m(static_cast<Eigen::Index>(vs.size()), vs.front().size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (vs[i].size() != m.cols()) throw InputError("poly: ragged facets");
      m.row(static_cast<Eigen::Index>(i)) = vs[i].transpose();
    }
    return polytope(std::move(m));
  }
  throw InputError("unknown space kind '" + kind + "'");
}

json NormedSpace::to_json() const {
  json n;
  n["kind"] = to_string(kind_);
  auto vec = [](const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  switch (kind_) {
    case NormKind::lp:
      if (std::isinf(p_)) n["p"] = "inf";
      else n["p"] = p_;
      break;
    case NormKind::weighted_sup:
    case NormKind::weighted_l1:
      n["weights"] = vec(weights_);
      break;
    case NormKind::custom_polytope: {
      json f = json::array();
      for (Eigen::Index r = 0; r < facets_.rows(); ++r) f.push_back(vec(facets_.row(r).transpose()));
      n["facets"] = f;
      break;
    }
  }
  return json{{"dim", dim_}, {"norm", n}};
}

std::string NormedSpace::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case NormKind::lp:
      os << "lp:" << (std::isinf(p_) ? std::string("inf") : std::to_string(p_)) << ":" << dim_;
      break;
    case NormKind::weighted_sup:
      os << "wsup:";
      for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << weights_[i];
      break;
    case NormKind::weighted_l1:
      os << "wl1:";
      for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << weights_[i];
      break;
    case NormKind::custom_polytope:
      os << "poly[" << facets_.rows() << " facets]:" << dim_;
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Frame

bool Frame::is_independent(const Matrix& basis, double rank_tol) {
  if (basis.cols() == 0 || basis.cols() > basis.rows()) return false;
  if (!basis.allFinite()) return false;
  Eigen::JacobiSVD<Matrix> svd(basis);
  const auto& sv = svd.singularValues();
  return sv[0] > 0.0 && sv[sv.size() - 1] >= rank_tol * sv[0];
}

Frame::Frame(NormedSpace space, Matrix basis, double rank_tol)
    : space_(std::move(space)), basis_(std::move(basis)) {
  if (basis_.rows() != space_.dim()) {
    throw InputError("frame: basis vectors do not match the space dimension");
  }
  if (basis_.cols() < 1) throw InputError("frame: need at least one basis vector");
  if (basis_.cols() > basis_.rows()) throw RankError("frame: more vectors than dimensions");
  if (!is_independent(basis_, rank_tol)) {
    throw RankError("frame: basis vectors are numerically dependent");
  }
}

Frame Frame::normalized() const {
  Matrix b = basis_;
  for (Eigen::Index i = 0; i < b.cols(); ++i) b.col(i) /= space_.norm(b.col(i));
  return Frame(space_, std::move(b));
}

Frame Frame::orthonormalized() const {
  Eigen::HouseholderQR<Matrix> qr(basis_);
  Matrix q = qr.householderQ() * Matrix::Identity(basis_.rows(), basis_.cols());
  return Frame(space_, std::move(q));
}

// ---------------------------------------------------------------------------
// Inner products

double unit_ball_volume(int k) {
  return std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

double InnerProductModel::gram_ball_volume() const {
  return unit_ball_volume(frame.k()) / std::sqrt(gram.determinant());
}

MveeResult mvee_centered(const Matrix& points, double tol, long max_iterations) {
  const auto k = points.rows();
  const auto n = points.cols();
  if (n < k) throw InputError("mvee: fewer points than dimensions");
  const double dk = static_cast<double>(k);
  Vector u = Vector::Constant(n, 1.0 / static_cast<double>(n));

  auto rebuild = [&](Matrix& xinv, Vector& omega) {
    Matrix x = points * u.asDiagonal() * points.transpose();
    Eigen::LLT<Matrix> llt(x);
    if (llt.info() != Eigen::Success) throw RankError("mvee: points do not span the space");
    xinv = llt.solve(Matrix::Identity(k, k));
    omega = (points.transpose() * xinv * points).diagonal();
  };

  Matrix xinv;
  Vector omega;
  rebuild(xinv, omega);
  long it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::Index jmax = 0;
    const double wmax = omega.maxCoeff(&jmax);
    // Away candidate among points carrying weight.
    Eigen::Index jmin = -1;
    double wmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (u[j] > 0.0 && omega[j] < wmin) {
        wmin = omega[j];
        jmin = j;
      }
    }
    if (wmax <= dk * (1.0 + tol) && wmin >= dk * (1.0 - tol)) break;

    Eigen::Index j;
    double beta;
    if (wmax - dk >= dk - wmin || jmin < 0) {
      j = jmax;
      beta = (wmax - dk) / (dk * (wmax - 1.0));
    } else {
      j = jmin;
      beta = (wmin - dk) / (dk * (wmin - 1.0));
      beta = std::max(beta, -u[j] / (1.0 - u[j]));
    }
    // Rank-one update of X^{-1} and omega for X' = (1 - beta) X + beta p p^T.
    const Vector xp = xinv * points.col(j);
    const double wj = omega[j];
    const double denom = (1.0 - beta) + beta * wj;
    const Vector proj = points.transpose() * xp;
    xinv = (xinv - (beta / denom) * xp * xp.transpose()) / (1.0 - beta);
    omega = (omega.array() - (beta / denom) * proj.array().square()) / (1.0 - beta);
    u *= (1.0 - beta);
    u[j] += beta;
    if (u[j] < 1e-300) u[j] = 0.0;
    if ((it + 1) % 256 == 0) rebuild(xinv, omega);
  }
  if (it >= max_iterations) {
    throw ConvergenceError("mvee: tolerance not reached within the iteration cap", it);
  }
  MveeResult res;
  res.shape = xinv / dk;
  res.iterations = it;
  return res;
}

int default_john_directions(int k) {
  switch (k) {
    case 1: return 2;
    case 2: return 512;
    case 3: return 2048;
    default: return 4096;
  }
}

InnerProductModel john_model(const Frame& frame, int n_dirs, double eps_mvee) {
  const int k = frame.k();
  if (n_dirs < 0) n_dirs = default_john_directions(k);
  if (n_dirs < 2 * k * (k + 1) && k > 1) {
    throw InputError("john_model: need at least 2k(k+1) sampling directions");
  }
  if (!(eps_mvee > 0.0)) throw InputError("john_model: eps_mvee must be positive");
  if (k == 1) {
    const double len = frame.space().norm(frame.vec(0));
    Matrix g(1, 1);
    g(0, 0) = len * len;
    return InnerProductModel{frame, g, ScaleMode::john_raw, eps_mvee, 0};
  }
  const auto dirs = sphere_points(k, n_dirs);
  Matrix pts(k, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double r = frame.coord_norm(dirs[i]);
    pts.col(static_cast<Eigen::Index>(i)) = dirs[i] / r;
  }
  // Sampled directions miss the corners of polytope balls; add the boundary
  // point farthest outside the current ellipsoid until none is left.
  SphereSearchOptions so;
  so.grid = n_dirs;
  long iterations = 0;
  Matrix g;
  double outside = 0.0;
  for (int round = 0; round <= 4 * k * (k + 1); ++round) {
    const auto mv = mvee_centered(pts, eps_mvee);
    iterations += mv.iterations;
    g = mv.shape;
    const auto far = maximize_on_sphere(
        k, [&](const Vector& d) { const double r = frame.coord_norm(d); return d.dot(g * d) / (r * r); }, so);
    outside = far.value;
    if (outside <= 1.0 + eps_mvee) break;
    pts.conservativeResize(Eigen::NoChange, pts.cols() + 1);
    pts.col(pts.cols() - 1) = far.point / frame.coord_norm(far.point);
  }
  // Enclose every boundary point found.
  const double worst = std::max(outside, (pts.transpose() * g * pts).diagonal().maxCoeff());
  g /= worst;
  g = 0.5 * (g + g.transpose());
  return InnerProductModel{frame, g, ScaleMode::john_raw, eps_mvee, iterations};
}

InnerProductModel volume_matched_model(const InnerProductModel& model, double ball_vol) {
  if (!(ball_vol > 0.0) || !std::isfinite(ball_vol)) {
    throw InputError("volume_matched_model: ball volume must be positive");
  }
  const int k = model.frame.k();
  const double det = model.gram.determinant();
  const double wk = unit_ball_volume(k);
  // omega_k / sqrt(det(s G)) = ball_vol.
  const double s = std::pow((wk / ball_vol) * (wk / ball_vol) / det, 1.0 / k);
  InnerProductModel out = model;
  out.gram = model.gram * s;
  out.scale_mode = ScaleMode::volume_matched;
  return out;
}

}  // namespace srbvol
