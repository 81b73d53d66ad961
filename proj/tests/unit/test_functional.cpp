#include <doctest.h>

#include "../support/fixtures.hpp"
#include "ratecert/functional.hpp"

using namespace ratecert;
using doctest::Approx;

namespace {

Problem scalar(double load_value) {
  const auto m = MaterialModel::isotropic_tensors(HardeningKind::Kinematic, 1, 0.5, 0.5, 0.0, 1.0);
  return assemble(m, LoadPath({{0.0, Vector::Zero(1)}, {1.0, Vector::Constant(1, load_value)}}, 1.0), Vector::Zero(1));
}

}  // namespace

TEST_SUITE("functional") {
  TEST_CASE("lagrangian examples") {
    const Problem p = scalar(2.0);
    CHECK(lagrangian(p, 1.0, Vector::Zero(1), Vector::Ones(1)).is_infinite());
    CHECK(lagrangian(p, 0.25, Vector::Zero(1), Vector::Zero(1)) == ExtendedReal(0.0));
    // l(0.25) = 0.5, y = 0, p = 1: 1 + 0 - 0.5.
    CHECK(lagrangian(p, 0.25, Vector::Zero(1), Vector::Ones(1)).value() == Approx(0.5));
    CHECK_THROWS_AS(lagrangian(p, 0.0, Vector::Zero(2), Vector::Zero(1)), ContractViolation);
  }

  TEST_CASE("lagrangian is nonnegative and vanishes on KKT triples") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    for (HardeningKind kind : {HardeningKind::Kinematic, HardeningKind::Isotropic, HardeningKind::Combined}) {
      const Problem p = testing::random_material_problem(kind, 41);
      const Eigen::Index n = p.dimension();
      const Eigen::LDLT<Matrix> solve(p.energy.matrix());
      for (int k = 0; k < 100; ++k) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
        if (kind != HardeningKind::Kinematic) v(n - 1) = std::abs(v(n - 1)) + v.head(n - 1).norm();
        const double t = std::uniform_real_distribution<double>(0, 1)(rng);
        const Vector q = p.psi.cstar().maximizer(v);
        const Vector y = solve.solve(p.load(t) - q);
        CHECK(std::abs(lagrangian(p, t, y, v).value()) <= 1e-9 * (1 + v.norm()));
        Vector y2(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) { y2(i) = g(rng); w(i) = g(rng); }
        const ExtendedReal l2 = lagrangian(p, t, y2, w);
        if (l2.is_finite()) CHECK(l2.value() >= -1e-12);
      }
    }
  }

  TEST_CASE("discrete functional examples") {
    const Problem p = testing::random_material_problem(HardeningKind::Combined, 5);
    const Partition part = Partition::uniform(1.0, 20);
    const Trajectory t = solve_theta(p, part, 0.75);
    const FunctionalReport f = eval_Fn_theta(p, t.states, part, 0.75);
    CHECK(f.total.value() <= 1e-9);
    CHECK(f.per_interval.size() == 20);
    double sum = f.initial_penalty;
    for (double v : f.per_interval) {
      CHECK(v >= -1e-12);
      sum += v;
    }
    CHECK(f.total.value() == Approx(sum).epsilon(1e-12));

    // Feasibility broken at one step.
    std::vector<Vector> bad = t.states;
    for (std::size_t i = 5; i < bad.size(); ++i) bad[i] = t.states[4];
    const FunctionalReport fb = eval_Fn_theta(p, bad, part, 0.75);
    if (!fb.feasible()) {
      CHECK(fb.total.is_infinite());
      CHECK(fb.feasibility_violations.front().interval >= 5);
    }

    // Shifted first node: total >= chi(delta).
    std::vector<Vector> shifted = t.states;
    Vector delta = Vector::Zero(p.dimension());
    delta(0) = 0.1;
    delta(p.dimension() - 1) = 0.2;
    shifted[0] += delta;
    const FunctionalReport fs = eval_Fn_theta(p, shifted, part, 0.75);
    CHECK(fs.initial_penalty == Approx(p.energy.phi(delta) + delta.squaredNorm()));
    CHECK(fs.total >= ExtendedReal(fs.initial_penalty));

    CHECK_THROWS_AS(eval_Fn_theta(p, std::vector<Vector>(t.states.begin(), t.states.end() - 1), part, 0.75),
                    ContractViolation);
  }

  TEST_CASE("a forced single-step violation is reported as +inf") {
    const Problem p = scalar(1.5);
    const Partition part = Partition::uniform(1.0, 2);
    const std::vector<Vector> states{Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)};
    const FunctionalReport f = eval_Fn_theta(p, states, part, 1.0);
    CHECK(f.total.is_infinite());
    REQUIRE(f.feasibility_violations.size() == 1);
    CHECK(f.feasibility_violations[0].interval == 2);
    CHECK(f.feasibility_violations[0].distance == Approx(0.5));
    CHECK(f.per_interval[0] == 0.0);
    CHECK(f.per_interval[1] == 0.0);
  }

  TEST_CASE("theta-point quadrature coincides with the discrete functional") {
    for (double theta : {0.5, 0.75, 1.0}) {
      const Problem p = testing::random_material_problem(HardeningKind::Isotropic, 12);
      const Trajectory t = solve_theta(p, Partition::uniform(1.0, 30), theta);
      const double a = eval_F(p, t).total.value();
      const double b = eval_Fn_theta(p, t.states, t.partition, theta).total.value();
      CHECK(std::abs(a - b) <= 1e-12);
    }
  }

  TEST_CASE("rest trajectory under zero load") {
    const auto m = MaterialModel::isotropic_tensors(HardeningKind::Isotropic, 2, 1.0, 0.0, 1.0, 1.0);
    const Problem p = assemble(m, LoadPath::zero(3, 1.0), Vector::Zero(3));
    const Partition part = Partition::uniform(1.0, 5);
    const Trajectory t{part, std::vector<Vector>(6, Vector::Zero(3)), {}, 1.0};
    CHECK(eval_F(p, t).total == ExtendedReal(0.0));
    CHECK(eval_F(p, t, QuadratureRule::exact()).total == ExtendedReal(0.0));
    CHECK(energy_balance_residual(p, t) == 0.0);
    CHECK(energy_balance_residual(p, t, BalanceMode::Continuous) == 0.0);
  }

  TEST_CASE("continuous functional on a piecewise-linear implicit Euler run") {
    const Problem p = testing::ramp_problem();
    // 25 steps: the yield time t = 1 lies inside interval 13.
    const Trajectory t = solve_theta(p, Partition::uniform(2.0, 25), 1.0);
    const FunctionalReport f = eval_F(p, t, QuadratureRule::exact());
    CHECK(f.feasible());
    CHECK(f.total.value() > 1e-6);
    for (double v : f.per_interval) CHECK(v >= -1e-12);
    int nonzero = 0;
    for (double v : f.per_interval) nonzero += v > 1e-12 ? 1 : 0;
    CHECK(nonzero == 1);
    CHECK(f.per_interval[12] > 0.0);
    // Certificate inequality against the exact solution.
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k) {
      const double s = 2.0 * k / 2000;
      worst = std::max(worst, p.energy.phi(t.interpolate(s) - testing::ramp_exact(s)));
    }
    CHECK(worst <= f.total.value() + 1e-12);
    const FunctionalReport sampled = eval_F(p, t, QuadratureRule::sampled(5));
    CHECK(sampled.feasible());
    CHECK(sampled.total.value() == Approx(f.total.value()));
  }

  TEST_CASE("perturbed trajectory has positive functional bounding its distance") {
    const Problem p = testing::ramp_problem();
    const Trajectory y = solve_theta(p, Partition::uniform(2.0, 40), 1.0);
    Trajectory v = y;
    for (int i = 0; i <= 40; ++i) {
      const double s = y.partition.time(i);
      v.states[static_cast<std::size_t>(i)](0) += 0.1 * std::sin(M_PI * s / 2.0);
    }
    for (QuadratureRule rule : {QuadratureRule::theta_point(), QuadratureRule::exact(), QuadratureRule::sampled(3)}) {
      const FunctionalReport f = eval_F(p, v, rule);
      CHECK(f.total > ExtendedReal(0.0));
      double worst = 0.0;
      for (std::size_t i = 0; i < v.states.size(); ++i) worst = std::max(worst, p.energy.phi(v.states[i] - y.states[i]));
      CHECK(f.total >= ExtendedReal(worst));
    }
  }

  TEST_CASE("convexity of the discrete functional") {
    std::mt19937_64 rng(61);
    std::normal_distribution<double> g;
    const Problem p = testing::random_material_problem(HardeningKind::Kinematic, 66);
    const Partition part = Partition::uniform(1.0, 10);
    const Trajectory y = solve_theta(p, part, 1.0);
    int checked = 0;
    for (int k = 0; k < 100; ++k) {
      std::vector<Vector> u = y.states, v = y.states;
      for (auto* s : {&u, &v}) {
        for (auto& x : *s) for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += 0.05 * g(rng);
      }
      const ExtendedReal fu = eval_Fn_theta(p, u, part, 1.0, Tolerances{1e-1, 1e-10, 1e-9, 1e-12}).total;
      const ExtendedReal fv = eval_Fn_theta(p, v, part, 1.0, Tolerances{1e-1, 1e-10, 1e-9, 1e-12}).total;
      for (double eta : {0.25, 0.5, 0.75}) {
        std::vector<Vector> w(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) w[i] = eta * u[i] + (1 - eta) * v[i];
        const ExtendedReal fw = eval_Fn_theta(p, w, part, 1.0, Tolerances{1e-1, 1e-10, 1e-9, 1e-12}).total;
        if (fu.is_finite() && fv.is_finite() && fw.is_finite()) {
          ++checked;
          CHECK(fw.value() <= eta * fu.value() + (1 - eta) * fv.value() + 1e-9);
        }
      }
    }
    CHECK(checked > 0);
  }

  TEST_CASE("stability examples") {
    const Problem p = scalar(2.0);
    CHECK(stability_check(p, 0.0, Vector::Zero(1)).stable);
    const StabilityResult r = stability_check(p, 1.0, Vector::Zero(1));
    CHECK_FALSE(r.stable);
    CHECK(r.distance == Approx(1.0));
  }

  TEST_CASE("energy balance") {
    for (HardeningKind kind : {HardeningKind::Kinematic, HardeningKind::Isotropic, HardeningKind::Combined}) {
      const Problem p = testing::random_material_problem(kind, 222);
      for (double theta : {0.5, 0.75, 1.0}) {
        const Trajectory t = solve_theta(p, Partition::uniform(1.0, 30), theta);
        CHECK(std::abs(energy_balance_residual(p, t)) <= 1e-9);
      }
    }
    // Continuous identity is exact when no yield event falls inside an interval.
    const Problem ramp = testing::ramp_problem();
    const Trajectory even = solve_theta(ramp, Partition::uniform(2.0, 40), 1.0);
    CHECK(std::abs(energy_balance_residual(ramp, even, BalanceMode::Continuous)) <= 1e-9);
    // Lazy but stable trajectory: the one-sided inequality.
    const Problem small = scalar(0.8);
    const Trajectory lazy{Partition::uniform(1.0, 4), std::vector<Vector>(5, Vector::Zero(1)), {}, 1.0};
    CHECK(energy_balance_residual(small, lazy, BalanceMode::Continuous) >= -1e-9);
  }
}
