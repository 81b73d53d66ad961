#include "ratecert/functional.hpp"

#include <algorithm>
#include <limits>

namespace ratecert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_states(const Problem& problem, const std::vector<Vector>& states, const Partition& partition) {
  require(states.size() == static_cast<std::size_t>(partition.steps()) + 1,
          "state list length must equal the number of partition nodes");
  for (const auto& y : states) require_dim(y.size(), problem.dimension(), "trajectory state");
  require(std::abs(partition.horizon() - problem.horizon()) <= 1e-12 * problem.horizon(),
          "partition must end at the load horizon T");
}

// Tracks the worst distance to C* on one interval.
struct FeasibilityProbe {
  const Problem& problem;
  const Tolerances& tol;
  double worst = 0.0;
  bool violated = false;

  void check(const Vector& q) {
    const double d = problem.psi.distance_to_cstar(q);
    worst = std::max(worst, d);
    if (d > tol.feas(q.norm())) violated = true;
  }
};

void finish(FunctionalReport& rep, const Problem& problem, const std::vector<Vector>& states) {
  rep.initial_penalty = initial_penalty(problem, states.front() - problem.y0);
  ExtendedReal total = rep.initial_penalty;
  for (double v : rep.per_interval) total += std::isfinite(v) ? ExtendedReal(v) : ExtendedReal::infinity();
  if (!rep.feasibility_violations.empty()) total = ExtendedReal::infinity();
  rep.total = total;
}

}  // namespace

ExtendedReal lagrangian(const Problem& problem, double t, const Vector& y, const Vector& p,
                        const Tolerances& tol) {
  require_dim(y.size(), problem.dimension(), "lagrangian y");
  require_dim(p.size(), problem.dimension(), "lagrangian p");
  const Vector q = problem.stress(t, y);
  const ExtendedReal conj = problem.psi.conjugate(q, tol);
  const ExtendedReal psi_p = problem.psi.eval(p, tol);
  if (conj.is_infinite() || psi_p.is_infinite()) return ExtendedReal::infinity();
  return ExtendedReal(psi_p.value() - q.dot(p));
}

double initial_penalty(const Problem& problem, const Vector& delta) {
  require_dim(delta.size(), problem.dimension(), "initial penalty");
  return problem.energy.phi(delta) + delta.squaredNorm();
}

FunctionalReport eval_Fn_theta(const Problem& problem, const std::vector<Vector>& states,
                               const Partition& partition, double theta, const Tolerances& tol) {
  check_states(problem, states, partition);
  FunctionalReport rep;
  rep.per_interval.reserve(states.size() - 1);
  for (int i = 1; i <= partition.steps(); ++i) {
    const Vector& a = states[static_cast<std::size_t>(i - 1)];
    const Vector& b = states[static_cast<std::size_t>(i)];
    const Vector e = b - a;
    const Vector q = problem.stress(partition.theta_time(i, theta), theta * b + (1.0 - theta) * a);
    FeasibilityProbe probe{problem, tol};
    probe.check(q);
    if (probe.violated) rep.feasibility_violations.push_back({i, probe.worst});
    const ExtendedReal psi_e = problem.psi.eval(e, tol);
    if (psi_e.is_finite()) {
      rep.dissipation_total += psi_e.value();
      rep.per_interval.push_back(psi_e.value() - q.dot(e));
    } else {
      rep.dissipation_total = kInf;
      rep.per_interval.push_back(kInf);
    }
  }
  finish(rep, problem, states);
  return rep;
}

FunctionalReport eval_F(const Problem& problem, const Trajectory& traj, QuadratureRule quadrature,
                        const Tolerances& tol) {
  if (quadrature.kind == Quadrature::ThetaPoint) {
    return eval_Fn_theta(problem, traj.states, traj.partition, traj.theta, tol);
  }
  require(quadrature.kind != Quadrature::Sampled || quadrature.samples >= 0,
          "sample count must be nonnegative");
  const Partition& part = traj.partition;
  const auto& states = traj.states;
  check_states(problem, states, part);
  FunctionalReport rep;
  rep.per_interval.reserve(states.size() - 1);
  for (int i = 1; i <= part.steps(); ++i) {
    const double t0 = part.time(i - 1);
    const double t1 = part.time(i);
    const Vector& a = states[static_cast<std::size_t>(i - 1)];
    const Vector& b = states[static_cast<std::size_t>(i)];
    const Vector e = b - a;
    auto state_at = [&](double t) {
      const double w = (t - t0) / (t1 - t0);
      return Vector((1.0 - w) * a + w * b);
    };

    FeasibilityProbe probe{problem, tol};
    probe.check(problem.stress(t0, a));
    probe.check(problem.stress(t1, b));
    if (quadrature.kind == Quadrature::Exact) {
      for (double t : problem.load.breakpoints_in(t0, t1)) probe.check(problem.stress(t, state_at(t)));
    } else {
      for (int k = 1; k <= quadrature.samples; ++k) {
        const double t = t0 + (t1 - t0) * k / (quadrature.samples + 1);
        probe.check(problem.stress(t, state_at(t)));
      }
      probe.check(problem.load.mean(t0, t1) - problem.energy.apply(0.5 * (a + b)));
    }
    if (probe.violated) rep.feasibility_violations.push_back({i, probe.worst});

    const ExtendedReal psi_e = problem.psi.eval(e, tol);
    if (psi_e.is_finite()) {
      rep.dissipation_total += psi_e.value();
      rep.per_interval.push_back(psi_e.value() - problem.load.mean(t0, t1).dot(e) +
                                 problem.energy.phi(b) - problem.energy.phi(a));
    } else {
      rep.dissipation_total = kInf;
      rep.per_interval.push_back(kInf);
    }
  }
  finish(rep, problem, states);
  return rep;
}

StabilityResult stability_check(const Problem& problem, double t, const Vector& y, const Tolerances& tol) {
  require_dim(y.size(), problem.dimension(), "stability check");
  const Vector q = problem.stress(t, y);
  const double d = problem.psi.distance_to_cstar(q);
  return {d <= tol.feas(q.norm()), d};
}

double energy_balance_residual(const Problem& problem, const Trajectory& traj, BalanceMode mode) {
  const Partition& part = traj.partition;
  const auto& ys = traj.states;
  check_states(problem, ys, part);
  const QuadraticEnergy& en = problem.energy;
  double dissipated = 0.0;
  for (int i = 1; i <= part.steps(); ++i) {
    const ExtendedReal psi_e =
        problem.psi.eval(ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(i - 1)]);
    if (psi_e.is_infinite()) return kInf;
    dissipated += psi_e.value();
  }
  if (mode == BalanceMode::Discrete) {
    const double theta = traj.theta;
    double acc = dissipated + en.phi(ys.back()) - en.phi(ys.front());
    for (int i = 1; i <= part.steps(); ++i) {
      const Vector e = ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(i - 1)];
      acc += (2.0 * theta - 1.0) * en.phi(e) - problem.load(part.theta_time(i, theta)).dot(e);
    }
    return acc;
  }
  const double t_end = part.horizon();
  const double lhs = en.phi(ys.back()) - problem.load(t_end).dot(ys.back()) + dissipated;
  double pairing = 0.0;
  for (int i = 1; i <= part.steps(); ++i) {
    pairing += problem.load.integral_derivative_pairing(part.time(i - 1), part.time(i),
                                                        ys[static_cast<std::size_t>(i - 1)],
                                                        ys[static_cast<std::size_t>(i)]);
  }
  const double rhs = en.phi(ys.front()) - problem.load(0.0).dot(ys.front()) - pairing;
  return lhs - rhs;
}

}  // namespace ratecert
