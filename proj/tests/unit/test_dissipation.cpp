#include <doctest.h>

#include "ratecert/dissipation.hpp"

#include <random>

using namespace ratecert;
using doctest::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

DissipationPotential kinematic1() { return DissipationPotential(CharacteristicSet::norm_ball(1.0, 1)); }
DissipationPotential cone1() { return DissipationPotential(CharacteristicSet::cone_capped(1.0, 1)); }
DissipationPotential box2() {
  Matrix n(4, 2);
  n << 1, 0, -1, 0, 0, 1, 0, -1;
  return DissipationPotential(CharacteristicSet::halfspaces(n, Vector::Ones(4)));
}
DissipationPotential product3() {
  return DissipationPotential(CharacteristicSet::product(
      {CharacteristicSet::norm_ball(2.0, 1), CharacteristicSet::cone_capped(1.0, 1)}));
}

}  // namespace

TEST_SUITE("dissipation") {
  TEST_CASE("eval_psi examples") {
    CHECK(eval_psi(kinematic1(), vec({0})) == ExtendedReal(0.0));
    CHECK(eval_psi(kinematic1(), vec({2})).value() == Approx(2.0));
    CHECK(eval_psi(cone1(), vec({0.5, 1})).value() == Approx(1.0));
    CHECK(eval_psi(cone1(), vec({2, 1})).is_infinite());
    CHECK(eval_psi(box2(), vec({1, -2})).value() == Approx(3.0));
    CHECK(eval_psi(product3(), vec({-1, 0.5, 1})).value() == Approx(3.0));
  }

  TEST_CASE("norm ball on a block ignores the other coordinates' support only through zero") {
    const DissipationPotential pot(CharacteristicSet::norm_ball(2.0, 3, 1, 2));
    CHECK(pot.eval(vec({5, 3, 4})).value() == Approx(10.0));
    CHECK(pot.distance_to_cstar(vec({1, 0, 0})) == Approx(1.0));
  }

  TEST_CASE("dist_to_cstar examples") {
    CHECK(dist_to_cstar(kinematic1(), vec({0.5})) == 0.0);
    CHECK(dist_to_cstar(kinematic1(), vec({3})) == Approx(2.0));
    CHECK(dist_to_cstar(cone1(), vec({1, 1})) == Approx(1.0 / std::sqrt(2.0)));
  }

  TEST_CASE("project_cstar examples") {
    CHECK(project_cstar(kinematic1(), vec({3}))(0) == Approx(1.0));
    const Vector inside = vec({0.2, -0.3});
    CHECK((project_cstar(cone1(), inside) - inside).norm() == 0.0);
    // Projection of (2,2) onto {|q| + g <= 1}: along the normal (1,1)/sqrt2 to (0.5, 0.5).
    const Vector p = project_cstar(cone1(), vec({2, 2}));
    CHECK(p(0) == Approx(0.5));
    CHECK(p(1) == Approx(0.5));
  }

  TEST_CASE("cone projection agrees with a grid search") {
    const DissipationPotential pot = cone1();
    for (const Vector& q : {vec({2, 2}), vec({-3, 0.5}), vec({0.1, 5}), vec({4, -6})}) {
      double best = 1e300;
      for (int i = -600; i <= 600; ++i) {
        const double a = i * 0.01;
        // Points on the boundary |a| + g = 1 and inside are both candidates; the
        // nearest point of an outside q lies on the boundary.
        const double g = 1.0 - std::abs(a);
        best = std::min(best, (q - vec({a, g})).norm());
      }
      if (std::abs(q(0)) + q(1) <= 1.0) best = 0.0;
      CHECK(pot.distance_to_cstar(q) == Approx(best).epsilon(1e-3));
    }
  }

  TEST_CASE("brute-force support of the capped cone") {
    // sup over a grid of {|q| + g <= 1}, g >= -3, for v = (0.5, 1).
    const Vector v = vec({0.5, 1});
    double best = -1e300;
    for (int i = -400; i <= 400; ++i) {
      const double q = i * 0.01;
      for (int j = -300; j <= 100; ++j) {
        const double g = j * 0.01;
        if (std::abs(q) + g <= 1.0 + 1e-12) best = std::max(best, q * v(0) + g * v(1));
      }
    }
    CHECK(cone1().eval(v).value() == Approx(best).epsilon(1e-6));
  }

  TEST_CASE("conjugacy examples") {
    const auto pot = kinematic1();
    const Vector v = vec({1});
    CHECK(pot.eval(v).value() + pot.conjugate(vec({1})).value() == Approx(v.dot(vec({1}))));
    CHECK(pot.eval(v).value() + pot.conjugate(vec({0.3})).value() > 0.3);
    CHECK(pot.conjugate(vec({1.5})).is_infinite());
  }

  TEST_CASE("verify_conjugacy passes for every kind") {
    for (const auto& pot : {kinematic1(), cone1(), box2(), product3(),
                            DissipationPotential(CharacteristicSet::cone_capped(2.0, 3))}) {
      const ConjugacyReport r = verify_conjugacy(pot, 1000, 11);
      CHECK(r.samples == 1000);
      CHECK(r.passed());
      CHECK(r.fenchel_checked > 0);
    }
  }

  TEST_CASE("support identity against 10^4 samples of C*") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (const auto& pot : {cone1(), box2(), DissipationPotential(CharacteristicSet::norm_ball(1.3, 2))}) {
      std::vector<Vector> qs;
      for (int k = 0; k < 10000; ++k) qs.push_back(pot.cstar().sample(rng, 2.0));
      for (int trial = 0; trial < 20; ++trial) {
        Vector v(pot.dimension());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
        const ExtendedReal psi = pot.eval(v);
        if (psi.is_infinite()) continue;
        double best = 0.0;
        for (const auto& q : qs) best = std::max(best, q.dot(v));
        CHECK(best <= psi.value() * (1.0 + 1e-9) + 1e-12);
        // Maximizer attains the value.
        CHECK(pot.cstar().maximizer(v).dot(v) == Approx(psi.value()).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("projection is idempotent and nonexpansive") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (const auto& pot : {kinematic1(), cone1(), box2(), product3()}) {
      for (int k = 0; k < 200; ++k) {
        Vector a(pot.dimension()), b(pot.dimension());
        for (Eigen::Index i = 0; i < a.size(); ++i) { a(i) = 3 * g(rng); b(i) = 3 * g(rng); }
        const Vector pa = pot.project_cstar(a), pb = pot.project_cstar(b);
        CHECK((pot.project_cstar(pa) - pa).norm() <= 1e-12 * (1 + pa.norm()));
        CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
      }
    }
  }

  TEST_CASE("homogeneity, triangle inequality, domain test") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (const auto& pot : {kinematic1(), cone1(), box2(), product3()}) {
      for (int k = 0; k < 200; ++k) {
        Vector b(pot.dimension()), c(pot.dimension());
        for (Eigen::Index i = 0; i < b.size(); ++i) { b(i) = g(rng); c(i) = g(rng); }
        const ExtendedReal pb = pot.eval(b), pc = pot.eval(c);
        CHECK(pb.is_finite() == pot.in_domain(b));
        if (pb.is_finite()) CHECK(pot.eval(2.5 * b).value() == Approx(2.5 * pb.value()));
        if (pb.is_finite() && pc.is_finite()) CHECK(pot.eval(b + c).value() <= pb.value() + pc.value() + 1e-12);
      }
    }
  }

  TEST_CASE("prox satisfies the Moreau decomposition") {
    const auto pot = cone1();
    const Vector z = vec({3, -1});
    const double t = 0.7;
    const Vector p = pot.prox(z, t);
    CHECK((p + t * pot.project_cstar(z / t) - z).norm() < 1e-12);
    CHECK(pot.in_domain(p));
  }

  TEST_CASE("contract violations") {
    CHECK_THROWS_AS(CharacteristicSet::norm_ball(0.0, 1), ContractViolation);
    CHECK_THROWS_AS(CharacteristicSet::cone_capped(1.0, 0), ContractViolation);
    Matrix n(1, 1);
    n << 1;
    CHECK_THROWS_AS(CharacteristicSet::halfspaces(n, vec({-1})), ContractViolation);
    CHECK_THROWS_AS(eval_psi(kinematic1(), vec({1, 2})), ContractViolation);
    CHECK_THROWS_AS(dist_to_cstar(cone1(), vec({1})), ContractViolation);
    CHECK_THROWS_AS(project_cstar(cone1(), vec({1, 2, 3})), ContractViolation);
  }
}
