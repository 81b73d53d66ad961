#pragma once

#include "ratecert/problem.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace ratecert {

/// Time partition 0 = t^0 < t^1 < ... < t^N = T.
class Partition {
 public:
  explicit Partition(std::vector<double> times);

  static Partition uniform(double horizon, int steps);
  static Partition from_steps(const std::vector<double>& steps);

  int steps() const { return static_cast<int>(times_.size()) - 1; }
  double time(int i) const { return times_[static_cast<std::size_t>(i)]; }
  double step(int i) const { return time(i) - time(i - 1); }  ///< tau^i, i >= 1
  double diameter() const;
  double horizon() const { return times_.back(); }
  /// theta t^i + (1 - theta) t^{i-1}
  double theta_time(int i, double theta) const { return theta * time(i) + (1.0 - theta) * time(i - 1); }
  bool constant_steps(double rel_tol = 1e-12) const;
  const std::vector<double>& times() const { return times_; }

  /// Partition with every flagged interval (1-based indices) split at its midpoint.
  Partition bisect(const std::vector<int>& intervals) const;

 private:
  std::vector<double> times_;
};

struct StepDiagnostics {
  int iterations = 0;
  double residual = 0.0;           ///< L^{theta,i} scalar residual at exit
  double feasibility = 0.0;        ///< dist_to_cstar of the theta-point stress
  double dissipation = 0.0;        ///< psi(y^i - y^{i-1})
};

/// States of a time-discrete scheme on a partition, with the interpolants
/// used by the functionals.
struct Trajectory {
  Partition partition;
  std::vector<Vector> states;
  std::vector<StepDiagnostics> diagnostics;  ///< one per interval
  double theta = 1.0;

  int steps() const { return partition.steps(); }
  /// Piecewise-linear interpolant.
  Vector interpolate(double t) const;
  /// Backward-constant interpolant.
  Vector backward_constant(double t) const;
  /// theta y^i + (1 - theta) y^{i-1}
  Vector theta_state(int i) const;
};

enum class StepMethod {
  Auto,           ///< closed-form return map when available, else proximal gradient
  ReturnMap,
  ProximalGradient,
};

struct SolverOptions {
  Tolerances tol;
  int max_iter = 100000;
  StepMethod method = StepMethod::Auto;
  /// Permit theta < 1/2 (unstable); only for reproducing instability.
  bool allow_unstable_theta = false;
};

struct StepResult {
  Vector y;
  StepDiagnostics diagnostics;
};

/// Precomputed data for repeated incremental solves on one problem and one
/// theta.  The incremental problem is
///   min_y  theta phi(y) - <l(t_theta) - (1 - theta) A y_prev, y> + psi(y - y_prev).
class IncrementalSolver {
 public:
  IncrementalSolver(const Problem& problem, double theta, SolverOptions options = {});
  ~IncrementalSolver();
  IncrementalSolver(IncrementalSolver&&) noexcept;
  IncrementalSolver& operator=(IncrementalSolver&&) = delete;

  /// Exact step (to tau_kkt).
  StepResult solve(const Vector& y_prev, double t_theta) const;
  /// Inexact step: returns the first iterate whose L^{theta,i} residual is
  /// at most `budget` while its theta-point stress stays in C*.
  StepResult solve_inexact(const Vector& y_prev, double t_theta, double budget) const;

  bool uses_return_map() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StepResult incremental_step(const Problem& problem, const Vector& y_prev, double t_theta,
                            double theta, const SolverOptions& options = {});

Trajectory solve_theta(const Problem& problem, const Partition& partition, double theta,
                       const SolverOptions& options = {});

/// Generalized theta-method: each step stops once its L^{theta,i}
/// contribution is at most inner_tol / N.
Trajectory solve_theta_inexact(const Problem& problem, const Partition& partition, double theta,
                               double inner_tol, const SolverOptions& options = {});

void check_theta(double theta, const SolverOptions& options);

}  // namespace ratecert
