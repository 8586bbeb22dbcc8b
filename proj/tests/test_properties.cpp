// Randomized invariants over seeded batteries.
#include "srbvol/checks.hpp"
#include "srbvol/geometry.hpp"
#include "srbvol/random.hpp"
#include "srbvol/space.hpp"
#include "srbvol/volume.hpp"

#include <doctest.h>

#include <cmath>

using namespace srbvol;

namespace {

std::vector<NormedSpace> spaces(int dim) {
  auto s = default_battery_norms(dim);
  s.push_back(NormedSpace::lp(dim, 3.0));
  Vector w = Vector::LinSpaced(dim, 1.0, 2.0);
  s.push_back(NormedSpace::weighted_l1(w));
  return s;
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("norm axioms") {
    Rng rng(21);
    for (const auto& s : spaces(4)) {
      for (int i = 0; i < 500; ++i) {
        const Vector x = rng.normal_vector(4), y = rng.normal_vector(4);
        const double a = rng.uniform(-3, 3);
        CHECK(s.norm(x + y) <= s.norm(x) + s.norm(y) + 1e-12);
        CHECK(s.norm(a * x) == doctest::Approx(std::abs(a) * s.norm(x)).epsilon(1e-12));
        const auto [ea, eb] = s.euclidean_equivalence();
        CHECK(s.norm(x) <= ea * x.norm() * (1 + 1e-12));
        CHECK(x.norm() <= eb * s.norm(x) * (1 + 1e-12));
      }
    }
  }

  TEST_CASE("line lengths scale and compose exactly") {
    Rng rng(22);
    for (const auto& s : spaces(3)) {
      for (int i = 0; i < 100; ++i) {
        const Matrix v = rng.normal_vector(3);
        const double a = rng.uniform(0.1, 4.0);
        const double m = induced_volume_parallelepiped(Frame(s, v)).value;
        CHECK(induced_volume_parallelepiped(Frame(s, a * v)).value == doctest::Approx(a * m).epsilon(1e-12));
        // det(AB|E) = det(A|BE) det(B|E) for lines.
        const Matrix A = Matrix::Random(3, 3) + 2 * Matrix::Identity(3, 3);
        const Matrix B = Matrix::Random(3, 3) + 2 * Matrix::Identity(3, 3);
        const double lhs = det_restricted(LinearMap::dense(A * B), Frame(s, v)).value;
        const double rhs = det_restricted(LinearMap::dense(A), Frame(s, B * v)).value *
                           det_restricted(LinearMap::dense(B), Frame(s, v)).value;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("plane volumes scale by a^2 and |det M|") {
    Rng rng(23);
    for (const auto& s : default_battery_norms(3)) {
      const Matrix b = random_frame_matrix(3, 2, rng);
      Matrix m(2, 2);
      m << 1.0, 0.3, -0.2, 0.8;
      MonteCarloOptions o;
      o.target_rel_err = 2e-3;
      o.seed = 5;
      const Frame f0(s, b), f1(s, b * m);
      const auto vols = coupled_ball_volumes({&f0, &f1}, o);
      // Coordinate balls transform by M^{-1}.
      const double ratio = vols[0].value / vols[1].value;
      const double se = std::hypot(vols[0].rel_error(), vols[1].rel_error());
      CHECK(std::abs(std::log(ratio) - std::log(std::abs(m.determinant()))) <= 3 * se);
    }
  }

  TEST_CASE("gap sandwich and angle-projection identity") {
    GeometryBatteryConfig cfg;
    cfg.pairs = 12;
    cfg.seed = 24;
    CHECK(verify_geometry_invariants(cfg).all_pass());
  }

  TEST_CASE("john sandwich on fresh vectors") {
    JohnSandwichConfig cfg;
    cfg.vectors = 500;
    cfg.max_k = 3;
    cfg.seed = 25;
    CHECK(verify_john_sandwich(cfg).all_pass());
  }

  TEST_CASE("small volume axiom battery") {
    VolumeAxiomConfig cfg;
    cfg.cases = 8;
    cfg.mc.target_rel_err = 5e-3;
    cfg.seed = 26;
    const auto r = verify_volume_axioms(cfg);
    CHECK(r.all_pass());
    CHECK(r.evaluated() == 8);
  }
}
