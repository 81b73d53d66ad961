#pragma once

#include "ratecert/solver.hpp"

#include <vector>

namespace ratecert {

/// How the conjugate (feasibility) term of the continuous functional is
/// evaluated on a piecewise-linear trajectory.
enum class Quadrature {
  /// Whole Lagrangian at the theta-point of each interval; coincides with
  /// the discrete functional F_n^theta.
  ThetaPoint,
  /// Exact integral of the finite part; feasibility checked at the interval
  /// ends and at interior load knots, which is exact because the stress is
  /// piecewise affine and C* is convex.
  Exact,
  /// Exact finite part; feasibility checked at `samples` interior points per
  /// interval and at the interval-average stress.  Diagnostic only.
  Sampled,
};

struct QuadratureRule {
  Quadrature kind = Quadrature::ThetaPoint;
  int samples = 0;

  static QuadratureRule theta_point() { return {Quadrature::ThetaPoint, 0}; }
  static QuadratureRule exact() { return {Quadrature::Exact, 0}; }
  static QuadratureRule sampled(int k) { return {Quadrature::Sampled, k}; }
};

struct FeasibilityViolation {
  int interval;      ///< 1-based
  double distance;   ///< worst dist_to_cstar seen on the interval
};

struct FunctionalReport {
  ExtendedReal total;
  /// Finite part of each interval's contribution; +inf only when the
  /// increment leaves the domain cone.
  std::vector<double> per_interval;
  double initial_penalty = 0.0;
  double dissipation_total = 0.0;
  std::vector<FeasibilityViolation> feasibility_violations;

  bool feasible() const { return feasibility_violations.empty(); }
};

/// L(t, y, p) = psi(p) + psi*(l(t) - A y) - <l(t) - A y, p>.
ExtendedReal lagrangian(const Problem& problem, double t, const Vector& y, const Vector& p,
                        const Tolerances& tol = {});

/// chi(d) = phi(d) + |d|^2.
double initial_penalty(const Problem& problem, const Vector& delta);

FunctionalReport eval_Fn_theta(const Problem& problem, const std::vector<Vector>& states,
                               const Partition& partition, double theta, const Tolerances& tol = {});

FunctionalReport eval_F(const Problem& problem, const Trajectory& traj,
                        QuadratureRule quadrature = {}, const Tolerances& tol = {});

struct StabilityResult {
  bool stable;
  double distance;
};

/// y in S(t) iff l(t) - A y lies in C*.
StabilityResult stability_check(const Problem& problem, double t, const Vector& y,
                                const Tolerances& tol = {});

enum class BalanceMode {
  /// Identity satisfied exactly by the theta-scheme:
  ///   psi(e) + phi(y^i) - phi(y^{i-1}) + (2 theta - 1) phi(e) = <l(t_theta), e>
  /// summed over the intervals.
  Discrete,
  /// Continuous energy identity at t = T for the piecewise-linear
  /// interpolant and the true load.
  Continuous,
};

/// Signed residual LHS - RHS of the energy balance.  +inf when an
/// increment leaves the domain cone.
double energy_balance_residual(const Problem& problem, const Trajectory& traj,
                               BalanceMode mode = BalanceMode::Discrete);

}  // namespace ratecert
