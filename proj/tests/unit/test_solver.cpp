#include <doctest.h>

#include "../support/fixtures.hpp"
#include "ratecert/functional.hpp"

using namespace ratecert;
using doctest::Approx;

namespace {

Problem scalar_kinematic(double a_half, const LoadPath& load) {
  const auto m = MaterialModel::isotropic_tensors(HardeningKind::Kinematic, 1, a_half, a_half, 0.0, 1.0);
  return assemble(m, load, Vector::Zero(1));
}

LoadPath constant_after_zero(const Vector& value) {
  return LoadPath({{0.0, Vector::Zero(value.size())}, {1.0, value}}, 1.0);
}

Problem polyhedral_problem() {
  Matrix normals(4, 2);
  normals << 1, 0, -1, 0, 0, 1, 1, 1;
  Matrix a(2, 2);
  a << 2, 0.5, 0.5, 1;
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff();
  std::vector<LoadKnot> knots{{0.0, Vector::Zero(2)},
                              {0.5, (Vector(2) << 3, 1).finished()},
                              {1.0, (Vector(2) << -2, 2).finished()}};
  return Problem{QuadraticEnergy(a, lmin, CoercivityScope::Global),
                 DissipationPotential(CharacteristicSet::halfspaces(normals, (Vector(4) << 1, 1, 0.5, 1.2).finished())),
                 LoadPath(std::move(knots), 1.0), Vector::Zero(2)};
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("partition") {
    const Partition p = Partition::uniform(2.0, 4);
    CHECK(p.steps() == 4);
    CHECK(p.horizon() == 2.0);
    CHECK(p.step(2) == Approx(0.5));
    CHECK(p.theta_time(1, 0.5) == Approx(0.25));
    CHECK(p.constant_steps());
    const Partition b = p.bisect({2});
    CHECK(b.steps() == 5);
    CHECK(b.time(2) == Approx(0.75));
    CHECK_FALSE(b.constant_steps());
    CHECK(b.diameter() == Approx(0.5));
    CHECK(Partition::from_steps({0.1, 0.2}).horizon() == Approx(0.3));
    CHECK_THROWS_AS(Partition::uniform(1.0, 0), ContractViolation);
    CHECK_THROWS_AS(Partition({0.0}), ContractViolation);
    CHECK_THROWS_AS(Partition({0.0, 0.5, 0.5}), ContractViolation);
  }

  TEST_CASE("incremental_step examples") {
    const Problem p = scalar_kinematic(1.0, constant_after_zero(Vector::Constant(1, 3.0)));
    // A = [[2]]; l(1) = 0.5 is elastic, l(1) = 3 yields 2y = 3 - 1.
    const Problem elastic = scalar_kinematic(1.0, constant_after_zero(Vector::Constant(1, 0.5)));
    CHECK(incremental_step(elastic, Vector::Zero(1), 1.0, 1.0).y(0) == 0.0);
    const double y = incremental_step(p, Vector::Zero(1), 1.0, 1.0).y(0);
    CHECK(y == Approx(1.0).epsilon(1e-12));
    // Grid minimization of y -> y^2 - 3y + |y| on [-5, 5].
    double best = 0.0, best_val = 1e300;
    for (int k = -5000000; k <= 5000000; k += 1) {
      const double x = k * 1e-6;
      const double v = x * x - 3 * x + std::abs(x);
      if (v < best_val) { best_val = v; best = x; }
    }
    CHECK(y == Approx(best).epsilon(1e-6));
  }

  TEST_CASE("isotropic incremental step hits the yield surface") {
    const auto m = MaterialModel::isotropic_tensors(HardeningKind::Isotropic, 1, 1.0, 0.0, 1.0, 1.0);
    const Problem p = assemble(m, constant_after_zero((Vector(2) << 2, 0).finished()), Vector::Zero(2));
    const StepResult r = incremental_step(p, Vector::Zero(2), 1.0, 1.0);
    const Vector q = p.stress(1.0, r.y);
    CHECK(std::abs(q(0)) + q(1) == Approx(1.0).epsilon(1e-12));
    CHECK(r.y(0) == Approx(0.5));
    CHECK(r.y(1) == Approx(0.5));
    // 2D grid search of 1/2 p^2 + 1/2 xi^2 - 2p + xi over |p| <= xi.
    double best_val = 1e300;
    Vector best(2);
    for (int i = -300; i <= 300; ++i) {
      for (int j = 0; j <= 300; ++j) {
        const double pp = i * 0.005, xi = j * 0.005;
        if (std::abs(pp) > xi) continue;
        const double v = 0.5 * pp * pp + 0.5 * xi * xi - 2 * pp + xi;
        if (v < best_val) { best_val = v; best << pp, xi; }
      }
    }
    CHECK((best - r.y).norm() < 1e-2);
  }

  TEST_CASE("return map agrees with proximal gradient") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.5, 1.0);
    SolverOptions pg;
    pg.method = StepMethod::ProximalGradient;
    for (HardeningKind kind : {HardeningKind::Kinematic, HardeningKind::Isotropic, HardeningKind::Combined}) {
      for (int trial = 0; trial < 8; ++trial) {
        const Problem p = testing::random_material_problem(kind, 300 + static_cast<std::uint64_t>(trial));
        const double theta = u(rng);
        const Partition part = Partition::uniform(1.0, 12);
        const Trajectory a = solve_theta(p, part, theta);
        const Trajectory b = solve_theta(p, part, theta, pg);
        CHECK(IncrementalSolver(p, theta).uses_return_map());
        double diff = 0.0;
        for (std::size_t i = 0; i < a.states.size(); ++i) diff = std::max(diff, (a.states[i] - b.states[i]).norm());
        CHECK(diff < 1e-7);
      }
    }
  }

  TEST_CASE("solve_theta on the 1D ramp") {
    const Problem p = testing::ramp_problem();
    const Trajectory t = solve_theta(p, Partition::uniform(2.0, 200), 1.0);
    CHECK(t.states.size() == 201);
    CHECK(t.states.front() == p.y0);
    CHECK(std::abs(t.states.back()(0) - 1.0) <= 2e-2);
    for (int i = 0; i <= 200; ++i) CHECK(stability_check(p, t.partition.time(i), t.states[static_cast<std::size_t>(i)]).stable);
  }

  TEST_CASE("zero load keeps the initial state") {
    const auto m = MaterialModel::isotropic_tensors(HardeningKind::Combined, 2, 1.0, 1.0, 1.0, 1.0);
    Vector y0(3);
    y0 << 0.1, -0.2, 0.5;
    const Problem p = assemble(m, LoadPath::zero(3, 1.0), Vector::Zero(3));
    Problem q = p;
    q.y0 = y0;
    if (stability_check(q, 0.0, y0).stable) {
      const Trajectory t = solve_theta(q, Partition::uniform(1.0, 10), 0.5);
      for (const auto& y : t.states) CHECK((y - y0).norm() == 0.0);
    }
    const Trajectory t0 = solve_theta(p, Partition::uniform(1.0, 10), 0.75);
    for (const auto& y : t0.states) CHECK(y.norm() == 0.0);
  }

  TEST_CASE("exact solves have zero discrete functional") {
    for (HardeningKind kind : {HardeningKind::Kinematic, HardeningKind::Isotropic, HardeningKind::Combined}) {
      for (std::uint64_t seed = 0; seed < 34; ++seed) {
        const Problem p = testing::random_material_problem(kind, 900 + seed);
        for (double theta : {0.5, 0.75, 1.0}) {
          const Trajectory t = solve_theta(p, Partition::uniform(1.0, 20), theta);
          const FunctionalReport f = eval_Fn_theta(p, t.states, t.partition, theta);
          CHECK(f.total.as_double() <= 1e-9 * (1 + p.load.sup_norm()));
        }
      }
    }
  }

  TEST_CASE("generic proximal path on a polyhedral dissipation") {
    const Problem p = polyhedral_problem();
    CHECK_FALSE(IncrementalSolver(p, 1.0).uses_return_map());
    SolverOptions rm;
    rm.method = StepMethod::ReturnMap;
    CHECK_THROWS_AS(IncrementalSolver(p, 1.0, rm), ContractViolation);
    for (double theta : {0.5, 1.0}) {
      const Trajectory t = solve_theta(p, Partition::uniform(1.0, 16), theta);
      const FunctionalReport f = eval_Fn_theta(p, t.states, t.partition, theta);
      CHECK(f.total.as_double() <= 1e-9 * (1 + p.load.sup_norm()));
    }
  }

  TEST_CASE("non-convergence carries the last residual") {
    const Problem p = polyhedral_problem();
    SolverOptions o;
    o.max_iter = 1;
    try {
      solve_theta(p, Partition::uniform(1.0, 4), 1.0, o);
      FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
      CHECK(e.last_residual() > 0.0);
    }
  }

  TEST_CASE("theta range") {
    const Problem p = testing::ramp_problem();
    try {
      solve_theta(p, Partition::uniform(2.0, 4), 0.3);
      FAIL("expected rejection");
    } catch (const ContractViolation& e) {
      CHECK(std::string(e.what()).find("theta must lie in [1/2,1]") != std::string::npos);
    }
    CHECK_THROWS_AS(solve_theta(p, Partition::uniform(2.0, 4), 1.2), ContractViolation);
    SolverOptions unstable;
    unstable.allow_unstable_theta = true;
    CHECK_NOTHROW(solve_theta(p, Partition::uniform(2.0, 4), 0.3, unstable));
  }

  TEST_CASE("contract checks") {
    const auto m = MaterialModel::isotropic_tensors(HardeningKind::Isotropic, 1, 1.0, 0.0, 1.0, 1.0);
    const Problem p = assemble(m, constant_after_zero((Vector(2) << 2, 0).finished()), Vector::Zero(2));
    CHECK_THROWS_AS(incremental_step(p, (Vector(2) << 1, 0).finished(), 1.0, 1.0), ContractViolation);
    CHECK_THROWS_AS(incremental_step(p, Vector::Zero(3), 1.0, 1.0), ContractViolation);
    CHECK_THROWS_AS(solve_theta(p, Partition::uniform(2.0, 4), 1.0), ContractViolation);
    CHECK_THROWS_AS(solve_theta_inexact(p, Partition::uniform(1.0, 4), 1.0, 0.0), ContractViolation);
  }

  TEST_CASE("inexact variant") {
    for (HardeningKind kind : {HardeningKind::Kinematic, HardeningKind::Combined}) {
      const Problem p = testing::random_material_problem(kind, 77);
      const Partition part = Partition::uniform(1.0, 25);
      for (double theta : {0.5, 1.0}) {
        const Trajectory exact = solve_theta(p, part, theta);
        const Trajectory tight = solve_theta_inexact(p, part, theta, 1e-12);
        double d = 0.0;
        for (std::size_t i = 0; i < exact.states.size(); ++i) d = std::max(d, (exact.states[i] - tight.states[i]).norm());
        CHECK(d <= 1e-6);
        const Trajectory loose = solve_theta_inexact(p, part, theta, 1e-4);
        const FunctionalReport f = eval_Fn_theta(p, loose.states, part, theta);
        CHECK(f.feasible());
        CHECK(f.total.value() <= 1e-4 + 1e-9);
        d = 0.0;
        for (std::size_t i = 0; i < exact.states.size(); ++i) d = std::max(d, (exact.states[i] - loose.states[i]).norm());
        CHECK(d <= std::sqrt(2e-4 / p.alpha()));
      }
    }
    const Problem ramp = testing::ramp_problem();
    const Partition part = Partition::uniform(2.0, 25);
    const Trajectory loose = solve_theta_inexact(ramp, part, 1.0, 1e-4);
    const Trajectory exact = solve_theta(ramp, part, 1.0);
    for (std::size_t i = 0; i < exact.states.size(); ++i)
      CHECK((exact.states[i] - loose.states[i]).norm() <= std::sqrt(2e-4 / ramp.alpha()));
  }

  TEST_CASE("rate independence under reparametrization") {
    const Problem p = testing::random_material_problem(HardeningKind::Combined, 55);
    const Partition part = Partition::uniform(1.0, 10);
    const std::vector<double> from{0.0, 0.3, 1.0}, to{0.0, 2.0, 2.5};
    Problem q = p;
    q.load = p.load.reparametrized(from, to);
    std::vector<double> mapped;
    for (double t : part.times()) mapped.push_back(t <= 0.3 ? t / 0.3 * 2.0 : 2.0 + (t - 0.3) / 0.7 * 0.5);
    mapped.back() = 2.5;
    const Partition part_q(mapped);
    for (double theta : {0.5, 1.0}) {
      const Trajectory a = solve_theta(p, part, theta);
      const Trajectory b = solve_theta(q, part_q, theta);
      for (std::size_t i = 0; i < a.states.size(); ++i) CHECK((a.states[i] - b.states[i]).norm() <= 1e-12);
      const double fa = eval_Fn_theta(p, a.states, part, theta).total.value();
      const double fb = eval_Fn_theta(q, a.states, part_q, theta).total.value();
      CHECK(std::abs(fa - fb) <= 1e-12);
    }
  }

  TEST_CASE("runs are bit-identical") {
    const Problem p = testing::random_material_problem(HardeningKind::Isotropic, 8);
    const Trajectory a = solve_theta(p, Partition::uniform(1.0, 30), 0.75);
    const Trajectory b = solve_theta(p, Partition::uniform(1.0, 30), 0.75);
    for (std::size_t i = 0; i < a.states.size(); ++i) CHECK((a.states[i].array() == b.states[i].array()).all());
  }

  TEST_CASE("interpolants") {
    const Problem p = testing::ramp_problem();
    const Trajectory t = solve_theta(p, Partition::uniform(2.0, 4), 1.0);
    CHECK(t.interpolate(1.75)(0) == Approx(0.5 * (t.states[3](0) + t.states[4](0))));
    CHECK(t.backward_constant(1.2)(0) == t.states[3](0));
    CHECK(t.backward_constant(0.0)(0) == t.states[0](0));
    CHECK(t.theta_state(4)(0) == t.states[4](0));
  }
}
