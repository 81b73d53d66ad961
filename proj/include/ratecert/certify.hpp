#pragma once

#include "ratecert/functional.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ratecert {

/// Uniform distance bound derived from a functional value F:
///   max phi(y - v) <= F   and   max |y - v| <= sqrt(2 F / alpha).
struct Certificate {
  ExtendedReal functional_value;
  double alpha = 0.0;
  CoercivityScope scope = CoercivityScope::Global;
  ExtendedReal uniform_phi_bound;
  ExtendedReal uniform_norm_bound;
  /// The norm bound needs coercivity on C - C or on the whole space.
  bool applicable = false;
  /// Per-interval budget used by adaptive refinement, when one was applied.
  std::optional<double> per_interval_budget;
};

Certificate make_certificate(const Problem& problem, ExtendedReal functional_value);

/// Certificate from F_n^theta of the candidate; bounds the distance of the
/// candidate's nodes to the exact theta-scheme on the same partition.
Certificate certify_distance(const Problem& problem, const Trajectory& candidate, double theta,
                             const Tolerances& tol = {});

struct LipschitzReport {
  double max_slope = 0.0;     ///< max_i |y^i - y^{i-1}| / tau^i
  int worst_interval = 0;     ///< 1-based; 0 when there are no increments
  double load_lipschitz = 0.0;
  bool applicable = false;
  double bound = 0.0;         ///< meaningful only when applicable
  double margin = 0.0;        ///< bound - max_slope
  std::string note;

  bool passed(double slack = 1e-8) const { return !applicable || max_slope <= bound + slack; }
};

/// Discrete Lipschitz bound: (1/alpha) |l'| for theta in {1/2, 1};
/// 1/(alpha (2 theta - 1)) |l'| for theta in (1/2, 1) on constant steps;
/// not applicable otherwise.
LipschitzReport verify_lipschitz(const Problem& problem, const Trajectory& traj, double theta);

struct AdaptOptions {
  int initial_steps = 15;
  std::optional<Partition> initial_partition;
  /// Per-interval budget alpha tol^2 / (divisor N).
  double budget_divisor = 4.0;
  SolverOptions solver;
};

struct AdaptRound {
  int steps;
  double budget;
  int refined;
  ExtendedReal functional_value;
};

struct AdaptResult {
  Partition partition;
  Trajectory trajectory;
  Certificate certificate;
  /// Exact continuous per-interval contributions of the final run.
  std::vector<double> per_interval;
  std::vector<AdaptRound> rounds;
  std::vector<double> refined_midpoints;  ///< times of every inserted node
  bool converged = false;
};

/// Bisects every interval whose continuous contribution exceeds the budget,
/// recomputing the budget each round, until all budgets are met or
/// max_rounds refinements were made.  The final certificate uses the
/// continuous functional evaluated exactly.
AdaptResult adapt_partition(const Problem& problem, double theta, double tol, int max_rounds,
                            const AdaptOptions& options = {});

/// Reference solution t -> y(t).
using Oracle = std::function<Vector(double)>;

/// Piecewise-linear interpolant of a fine theta = 1 run with
/// steps = factor * max_steps.
Oracle reference_oracle(const Problem& problem, int steps, const SolverOptions& options = {});

struct ConvergenceLevel {
  int steps;
  double tau;
  double error;
  bool at_floor;  ///< error at rounding level; excluded from the fit
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;
  std::optional<double> slope;  ///< least-squares slope of log error vs log tau
  /// Slope of the same fit with every error raised to the rounding floor;
  /// defined whenever the levels have distinct step sizes.
  std::optional<double> clamped_slope;
  double floor = 0.0;
  double required_slope = 0.4;
  bool slope_tested = false;
  bool passed = true;
};

struct ConvergenceOptions {
  int samples_per_interval = 4;
  /// Errors at or below floor_rel * (1 + max |y|) count as rounding level.
  double floor_rel = 1e-11;
  double required_slope = 0.4;
  SolverOptions solver;
};

ConvergenceReport convergence_study(const Problem& problem, double theta,
                                    const std::vector<int>& refinements, const Oracle& oracle,
                                    const ConvergenceOptions& options = {});

/// Max over nodes and interior samples of |traj(t) - oracle(t)|.
double uniform_error(const Trajectory& traj, const Oracle& oracle, int samples_per_interval = 4);

}  // namespace ratecert
