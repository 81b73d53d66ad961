#pragma once

#include "ratecert/dissipation.hpp"
#include "ratecert/energy.hpp"
#include "ratecert/load_path.hpp"

namespace ratecert {

/// Finite-dimensional rate-independent problem
///   d psi(y') + A y  contains  l(t),   y(0) = y0,   t in [0, T].
struct Problem {
  QuadraticEnergy energy;
  DissipationPotential psi;
  LoadPath load;
  Vector y0;

  Eigen::Index dimension() const { return energy.dimension(); }
  double horizon() const { return load.horizon(); }
  double alpha() const { return energy.alpha(); }

  /// Generalized stress l(t) - A y.
  Vector stress(double t, const Vector& y) const { return load(t) - energy.apply(y); }
};

/// Checks dimensions, y0 in C, and stability of y0 at t = 0.  Throws
/// ContractViolation (message carries the distance to C*) on failure.
void validate_problem(const Problem& problem, const Tolerances& tol = {});

}  // namespace ratecert
