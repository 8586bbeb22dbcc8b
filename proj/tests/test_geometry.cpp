#include "srbvol/error.hpp"
#include "srbvol/geometry.hpp"
#include "srbvol/random.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace srbvol;

namespace {

const NormedSpace kSup = NormedSpace::lp(2, std::numeric_limits<double>::infinity());

Frame line(const NormedSpace& s, double x, double y) {
  Matrix b(2, 1);
  b << x, y;
  return Frame(s, b);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("distances to subspaces") {
    Vector x(2);
    x << 1, 1;
    CHECK(distance_to_subspace(x, line(kSup, 1, 0)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(distance_to_subspace(x, line(NormedSpace::lp(2, 2), 1, 0)) == doctest::Approx(1.0).epsilon(1e-9));
    // l1 distance from (1, 1) to the diagonal x = -y: min over s of |1-s| + |1+s| = 2.
    CHECK(distance_to_subspace(x, line(NormedSpace::lp(2, 1), 1, -1)) == doctest::Approx(2.0).epsilon(1e-9));
  }

  TEST_CASE("identical subspaces have zero gap") {
    const auto g = gap_distances(line(kSup, 1, 0), line(kSup, 1, 0));
    CHECK(g.delta_a == doctest::Approx(0.0));
    CHECK(g.d_h == doctest::Approx(0.0));
  }

  TEST_CASE("tilted line under l-inf") {
    const auto g = gap_distances(line(kSup, 1, 0), line(kSup, 1, 0.1));
    CHECK(g.delta_a == doctest::Approx(0.1).epsilon(2e-3));
    CHECK(g.d_h == doctest::Approx(0.1).epsilon(2e-3));
  }

  TEST_CASE("euclidean lines at angle theta") {
    const auto l2 = NormedSpace::lp(2, 2);
    for (double th : {0.05, 0.4, 1.2}) {
      const auto g = gap_distances(line(l2, 1, 0), line(l2, std::cos(th), std::sin(th)));
      CHECK(g.delta_a == doctest::Approx(std::sin(th)).epsilon(2e-3));
      CHECK(g.d_h == doctest::Approx(2 * std::sin(th / 2)).epsilon(2e-3));
      CHECK(angle(line(l2, 1, 0), line(l2, std::cos(th), std::sin(th))) ==
            doctest::Approx(std::sin(th)).epsilon(2e-3));
    }
  }

  TEST_CASE("gap distances stop at k = 3") {
    const auto s = NormedSpace::lp(5, 2);
    const Frame e(s, Matrix::Identity(5, 4));
    CHECK_THROWS_AS(gap_distances(e, e), UnsupportedDimensionError);
  }

  TEST_CASE("coordinate and skew splittings under l-inf") {
    const auto coord = projection_and_angle(line(kSup, 1, 0), line(kSup, 0, 1), true);
    CHECK(coord.angle == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(coord.proj_norm == doctest::Approx(1.0).epsilon(1e-9));
    const auto skew = projection_and_angle(line(kSup, 1, 0), line(kSup, 1, 1), true);
    CHECK(skew.angle == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(skew.proj_norm == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(check_splitting(skew).all_pass());
  }

  TEST_CASE("projection matrix matches the linear algebra oracle") {
    Matrix eb(3, 1), fb(3, 2);
    eb << 1, 2, 0;
    fb << 0, 1, 1, 0, 0, 1;
    const auto s = NormedSpace::lp(3, 1);
    const Matrix p = projection_matrix(Frame(s, eb), Frame(s, fb));
    Matrix m(3, 3);
    m << eb, fb;
    Matrix sel = Matrix::Zero(3, 3);
    sel(0, 0) = 1;
    const Matrix oracle = m * sel * m.inverse();
    CHECK((p - oracle).norm() < 1e-12);
    CHECK_THROWS_AS(projection_matrix(Frame(s, eb), Frame(s, eb)), SplittingError);
  }

  TEST_CASE("john complements") {
    const auto c = complement(line(kSup, 1, 0));
    CHECK(std::abs(c.f.vec(0)[0]) < 1e-3 * std::abs(c.f.vec(0)[1]));
    CHECK(c.angle == doctest::Approx(1.0).epsilon(2e-3));

    const auto cube = NormedSpace::lp(3, std::numeric_limits<double>::infinity());
    Matrix diag(3, 1);
    diag << 1, 1, 1;
    const auto cc = complement(Frame(cube, diag));
    // Complement is the plane x + y + z = 0.
    for (int i = 0; i < cc.f.k(); ++i) CHECK(std::abs(cc.f.vec(i).sum()) < 5e-3 * cc.f.vec(i).norm());
    CHECK(cc.angle >= (1 - 1e-3));
  }

  TEST_CASE("perturbed splitting bounds") {
    const auto rep = check_perturbed_splitting(line(kSup, 1, 0), line(kSup, 1, 0.1), line(kSup, 0, 1));
    CHECK(rep.all_pass());
    CHECK(rep.evaluated() > 0);
  }
}
