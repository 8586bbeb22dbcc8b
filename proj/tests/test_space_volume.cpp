#include "srbvol/error.hpp"
#include "srbvol/linear_map.hpp"
#include "srbvol/random.hpp"
#include "srbvol/space.hpp"
#include "srbvol/volume.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace srbvol;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

MonteCarloOptions mc(double rel, std::uint64_t seed = 11) {
  MonteCarloOptions o;
  o.target_rel_err = rel;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_SUITE("space") {
  TEST_CASE("norm values") {
    CHECK(NormedSpace::lp(2, kInf).norm(vec({3, -4})) == 4.0);
    CHECK(NormedSpace::lp(2, 1).norm(vec({3, -4})) == 7.0);
    CHECK(NormedSpace::lp(2, 2).norm(vec({3, -4})) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(NormedSpace::weighted_sup(vec({1, 0.5})).norm(vec({1, 3})) == 1.5);
    CHECK(NormedSpace::parse("wl1:1,2").norm(vec({1, -1})) == 3.0);
    // polytope with the square's facets is l-inf
    CHECK(NormedSpace::parse("poly:1,0;0,1").norm(vec({0.3, -0.7})) == doctest::Approx(0.7));
  }

  TEST_CASE("compact and json forms agree") {
    const auto a = NormedSpace::parse("lp:inf:3");
    const auto b = NormedSpace::from_json(json::parse(R"({"dim": 3, "norm": {"kind": "lp", "p": "inf"}})"));
    CHECK(a.dim() == 3);
    CHECK(b.norm(vec({1, -2, 0.5})) == a.norm(vec({1, -2, 0.5})));
    CHECK(NormedSpace::from_json(a.to_json()).describe() == a.describe());
  }

  TEST_CASE("bad space text is an input error") {
    CHECK_THROWS_AS(NormedSpace::parse("lp:0.5:2"), InputError);
    CHECK_THROWS_AS(NormedSpace::parse("sup:2"), InputError);
    CHECK_THROWS_AS(NormedSpace::parse("poly:1,0"), InputError);  // rows do not span R^2
  }

  TEST_CASE("operator norms against sampled ratios") {
    Rng rng(5);
    const Matrix a = mat2(1.0, -2.0, 0.5, 3.0);
    for (const char* s : {"lp:1:2", "lp:2:2", "lp:inf:2", "wsup:1,0.25", "lp:3:2"}) {
      const auto space = NormedSpace::parse(s);
      double sampled = 0.0;
      for (int i = 0; i < 20000; ++i) {
        const Vector v = rng.unit_vector(2);
        sampled = std::max(sampled, space.norm(a * v) / space.norm(v));
      }
      const double op = space.operator_norm(a);
      CHECK(op >= sampled * (1 - 1e-9));
      CHECK(op <= sampled * 1.001);
    }
  }

  TEST_CASE("euclidean equivalence constants are sharp on l1") {
    const auto [a, b] = NormedSpace::lp(4, 1).euclidean_equivalence();
    CHECK(a == doctest::Approx(2.0));  // |x|_1 <= sqrt(4) |x|_2
    CHECK(b == doctest::Approx(1.0));
  }

  TEST_CASE("MVEE of the square and the diamond") {
    // Enclosing ellipse of the square's corners is the disk of radius sqrt 2.
    Matrix corners(2, 2);
    corners << 1, 1, 1, -1;
    const auto sq = mvee_centered(corners, 1e-9);
    CHECK((sq.shape - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-6);
    const auto diamond = mvee_centered(Matrix::Identity(2, 2), 1e-9);
    CHECK((diamond.shape - Matrix::Identity(2, 2)).norm() < 1e-6);
  }

  TEST_CASE("john models in the plane") {
    const Frame sq(NormedSpace::lp(2, kInf), Matrix::Identity(2, 2));
    const auto m = john_model(sq);
    CHECK((m.gram - 0.5 * Matrix::Identity(2, 2)).norm() < 2e-3);
    const auto l2 = john_model(Frame(NormedSpace::lp(2, 2), Matrix::Identity(2, 2)));
    CHECK((l2.gram - Matrix::Identity(2, 2)).norm() < 2e-3);
    const auto l1 = john_model(Frame(NormedSpace::lp(2, 1), Matrix::Identity(2, 2)));
    CHECK((l1.gram - Matrix::Identity(2, 2)).norm() < 2e-3);
    // Area matching: the disk of radius 2/sqrt(pi) has area 4.
    const auto matched = volume_matched_model(m, 4.0);
    CHECK(matched.gram(0, 0) == doctest::Approx(M_PI / 4).epsilon(3e-3));
    CHECK(matched.gram_ball_volume() == doctest::Approx(4.0).epsilon(1e-9));
  }

  TEST_CASE("dependent basis is a rank error") {
    Matrix b(2, 2);
    b << 1, 2, 1, 2;
    CHECK_THROWS_AS(Frame(NormedSpace::lp(2, 2), b), RankError);
  }
}

TEST_SUITE("volume") {
  TEST_CASE("unit ball coordinate volumes in the plane") {
    const std::pair<const char*, double> cases[] = {{"lp:inf:2", 4.0}, {"lp:1:2", 2.0}, {"lp:2:2", M_PI}};
    for (const auto& [s, exact] : cases) {
      const auto v = unit_ball_coord_volume(Frame(NormedSpace::parse(s), Matrix::Identity(2, 2)), mc(2e-3));
      CHECK(v.method == VolumeMethod::monte_carlo);
      CHECK(std::abs(v.value - exact) <= 3.0 * v.std_error);
    }
  }

  TEST_CASE("parallelepiped volumes") {
    const auto sq = induced_volume_parallelepiped(Frame(NormedSpace::lp(2, kInf), Matrix::Identity(2, 2)), mc(2e-3));
    CHECK(std::abs(sq.value - M_PI / 4) <= 3.0 * sq.std_error);
    const auto disk = induced_volume_parallelepiped(Frame(NormedSpace::lp(2, 2), Matrix::Identity(2, 2)), mc(2e-3));
    CHECK(std::abs(disk.value - 1.0) <= 3.0 * disk.std_error);
    Matrix line(3, 1);
    line << 3, 0, 0;
    const auto l = induced_volume_parallelepiped(Frame(NormedSpace::lp(3, 1.5), line));
    CHECK(l.method == VolumeMethod::exact_1d);
    CHECK(l.value == doctest::Approx(3.0).epsilon(1e-15));
  }

  TEST_CASE("euclidean parallelepiped equals the Gram determinant") {
    Rng rng(3);
    Matrix b(3, 2);
    b << 1.0, 0.4, -0.3, 1.2, 0.5, 0.7;
    const double oracle = std::sqrt((b.transpose() * b).determinant());
    const auto v = induced_volume_parallelepiped(Frame(NormedSpace::lp(3, 2), b), mc(2e-3));
    CHECK(std::abs(v.value - oracle) <= 3.0 * v.std_error);
  }

  TEST_CASE("orthogonality defect") {
    const auto sq = NormedSpace::lp(2, kInf);
    CHECK(orthogonality_defect(Frame(sq, Matrix::Identity(2, 2))) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(orthogonality_defect(Frame(sq, mat2(1, 1, 0, 1))) == doctest::Approx(3.0).epsilon(1e-3));
    const Matrix rot = Eigen::Rotation2Dd(0.3).toRotationMatrix();
    CHECK(orthogonality_defect(Frame(NormedSpace::lp(2, 2), rot)) == doctest::Approx(2.0).epsilon(1e-9));
  }

  TEST_CASE("restricted determinants") {
    const Frame plane(NormedSpace::lp(2, kInf), Matrix::Identity(2, 2));
    const auto d = det_restricted(LinearMap::dense(mat2(2, 0, 0, 3)), plane);
    CHECK(d.method == VolumeMethod::closed_form);
    CHECK(d.value == doctest::Approx(6.0).epsilon(1e-14));
    const auto scaled = det_restricted(LinearMap::dense(1.7 * Matrix::Identity(2, 2)), plane);
    CHECK(scaled.value == doctest::Approx(1.7 * 1.7).epsilon(1e-14));
    // k = 1: det is the length ratio |A v| / |v|.
    Matrix e1(2, 1);
    e1 << 1, 0;
    const auto shear = LinearMap::dense(mat2(1, 0, 1, 1));
    CHECK(det_restricted(shear, Frame(NormedSpace::lp(2, 1), e1)).value == doctest::Approx(2.0));
    CHECK(det_restricted(shear, Frame(NormedSpace::lp(2, kInf), e1)).value == doctest::Approx(1.0));
  }

  TEST_CASE("euclidean determinant of a plane moved off itself") {
    Matrix a(3, 3);
    a << 1.0, 0.2, 0.0, 0.0, 2.0, 0.5, 0.3, -0.4, 0.7;
    Matrix b(3, 2);
    b << 1, 0, 0, 1, 0, 0;
    const double oracle = std::sqrt(((a * b).transpose() * (a * b)).determinant());
    const auto d = det_restricted(LinearMap::dense(a), Frame(NormedSpace::lp(3, 2), b), mc(1e-3));
    CHECK(d.method == VolumeMethod::monte_carlo);
    CHECK(std::abs(d.log_value - std::log(oracle)) <= 3.0 * d.std_error_log);
  }

  TEST_CASE("degenerate image") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    const auto d = det_restricted(LinearMap::dense(a), Frame(NormedSpace::lp(2, 2), Matrix::Identity(2, 2)));
    CHECK(d.degenerate);
    CHECK(d.value == 0.0);
  }

  TEST_CASE("estimates depend on the seed only") {
    const Frame f(NormedSpace::parse("wsup:1,0.5,2"), Matrix::Identity(3, 3));
    auto o = mc(5e-3, 99);
    const auto a = unit_ball_coord_volume(f, o);
    o.workers = 3;
    const auto b = unit_ball_coord_volume(f, o);
    CHECK(a.value == b.value);
    CHECK(a.n_samples == b.n_samples);
  }
}
