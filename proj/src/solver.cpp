#include "ratecert/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ratecert {

// ---------------------------------------------------------------------------
// Partition / Trajectory

Partition::Partition(std::vector<double> times) : times_(std::move(times)) {
  require(times_.size() >= 2, "partition needs at least one step");
  require(times_.front() == 0.0, "partition must start at t = 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    require(std::isfinite(times_[i]) && times_[i] > times_[i - 1],
            "partition times must be strictly increasing");
  }
}

Partition Partition::uniform(double horizon, int steps) {
  require(steps >= 1, "partition needs at least one step");
  require(horizon > 0.0, "partition horizon must be positive");
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) t[static_cast<std::size_t>(i)] = horizon * i / steps;
  t.back() = horizon;
  return Partition(std::move(t));
}

Partition Partition::from_steps(const std::vector<double>& steps) {
  require(!steps.empty(), "partition needs at least one step");
  std::vector<double> t{0.0};
  for (double s : steps) {
    require(s > 0.0, "time steps must be positive");
    t.push_back(t.back() + s);
  }
  return Partition(std::move(t));
}

double Partition::diameter() const {
  double d = 0.0;
  for (int i = 1; i <= steps(); ++i) d = std::max(d, step(i));
  return d;
}

bool Partition::constant_steps(double rel_tol) const {
  const double ref = horizon() / steps();
  for (int i = 1; i <= steps(); ++i) {
    if (std::abs(step(i) - ref) > rel_tol * ref) return false;
  }
  return true;
}

Partition Partition::bisect(const std::vector<int>& intervals) const {
  std::vector<bool> flag(times_.size(), false);
  for (int i : intervals) {
    require(i >= 1 && i <= steps(), "bisect: interval index out of range");
    flag[static_cast<std::size_t>(i)] = true;
  }
  std::vector<double> out{times_.front()};
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (flag[i]) out.push_back(0.5 * (times_[i - 1] + times_[i]));
    out.push_back(times_[i]);
  }
  return Partition(std::move(out));
}

namespace {

int locate(const Partition& part, double t) {
  const auto& ts = part.times();
  if (t <= ts.front()) return 1;
  if (t >= ts.back()) return part.steps();
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  return std::max(1, static_cast<int>(it - ts.begin()));
}

}  // namespace

Vector Trajectory::interpolate(double t) const {
  const int i = locate(partition, t);
  const double w = std::clamp((t - partition.time(i - 1)) / partition.step(i), 0.0, 1.0);
  return (1.0 - w) * states[static_cast<std::size_t>(i - 1)] + w * states[static_cast<std::size_t>(i)];
}

Vector Trajectory::backward_constant(double t) const {
  if (t <= partition.time(0)) return states.front();
  return states[static_cast<std::size_t>(locate(partition, t))];
}

Vector Trajectory::theta_state(int i) const {
  return theta * states[static_cast<std::size_t>(i)] + (1.0 - theta) * states[static_cast<std::size_t>(i - 1)];
}

void check_theta(double theta, const SolverOptions& options) {
  require(std::isfinite(theta) && theta <= 1.0, "theta must lie in [1/2,1]");
  if (!options.allow_unstable_theta) require(theta >= 0.5, "theta must lie in [1/2,1]");
  require(theta > 0.0, "theta must be positive");
}

// ---------------------------------------------------------------------------
// Incremental solver

namespace {

// Root of  sum_k w_k / (c_k s + e)^2 = 1  on (s_lo, inf), where the left end
// has the sum > 1 and all denominators positive beyond s_lo.  This is the
// secular equation of the radial return on a norm-type yield surface.
struct Secular {
  Vector w;
  Vector c;
  double e;
  double s_lo;

  double sum(double s) const {
    return (w.array() / (c.array() * s + e).square()).sum();
  }
  // > 0 on the feasible (right) side.
  double h(double s) const { return 1.0 / std::sqrt(sum(s)) - 1.0; }
  double dh(double s) const {
    const double g = sum(s);
    const double dg = -2.0 * (w.array() * c.array() / (c.array() * s + e).cube()).sum();
    return -0.5 * dg / (g * std::sqrt(g));
  }
  double upper() const {
    const double total = std::sqrt(w.sum());
    return std::max(s_lo, (total - e) / c.minCoeff());
  }
};

double solve_secular(const Secular& eq, int* iterations) {
  double lo = eq.s_lo;
  double hi = eq.upper();
  if (hi <= lo) return hi;
  double s = hi;
  int it = 0;
  for (; it < 300; ++it) {
    const double val = eq.h(s);
    if (val == 0.0) break;
    if (val > 0.0) hi = s; else lo = s;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    const double slope = eq.dh(s);
    double next = s - val / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == s) break;
    s = next;
  }
  if (iterations) *iterations = it + 1;
  // Return the feasible side of the bracket when the iteration ended on the infeasible one.
  return eq.h(s) >= 0.0 ? s : hi;
}

}  // namespace

struct IncrementalSolver::Impl {
  enum class Map { None, Ball, Cone };

  const Problem& problem;
  double theta;
  SolverOptions options;
  Map map = Map::None;
  Eigen::Index p_dim = 0;
  Matrix eigvecs;  // of the p-block of A
  Vector eigvals;
  double hxi = 0.0;
  double sigma = 0.0;
  double prox_step = 0.0;

  Impl(const Problem& p, double th, SolverOptions opt) : problem(p), theta(th), options(opt) {
    check_theta(theta, options);
    const Matrix& a = problem.energy.matrix();
    const Eigen::Index n = problem.dimension();
    prox_step = 1.0 / (theta * std::max(problem.energy.lambda_max(), std::numeric_limits<double>::min()));

    const auto& cs = problem.psi.cstar();
    if (const auto* b = cs.as_norm_ball(); b && b->block_offset == 0 && b->block_size == n) {
      map = Map::Ball;
      p_dim = n;
      sigma = b->radius;
    } else if (const auto* c = cs.as_cone_capped()) {
      const Eigen::Index p = c->p_dim;
      const bool decoupled = a.block(0, p, p, 1).isZero(0.0) && a.block(p, 0, 1, p).isZero(0.0);
      if (decoupled && a(p, p) > 0.0) {
        map = Map::Cone;
        p_dim = p;
        hxi = a(p, p);
        sigma = c->sigma;
      }
    }
    if (map != Map::None) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(a.topLeftCorner(p_dim, p_dim));
      eigvecs = eig.eigenvectors();
      eigvals = eig.eigenvalues();
      if (eigvals.minCoeff() <= 0.0) map = Map::None;
    }
    if (options.method == StepMethod::ProximalGradient) map = Map::None;
    if (options.method == StepMethod::ReturnMap) {
      require(map != Map::None, "closed-form return map is not available for this problem");
    }
  }

  // Step d for a given secular parameter s (s > 0).
  Vector step_for(const Vector& r, double s) const {
    const Eigen::Index n = problem.dimension();
    Vector d = Vector::Zero(n);
    const Vector rt = eigvecs.transpose() * r.head(p_dim);
    Vector dt(p_dim);
    if (map == Map::Ball) {
      for (Eigen::Index k = 0; k < p_dim; ++k) dt(k) = s * rt(k) / (theta * eigvals(k) * s + sigma);
    } else {
      const double e = sigma - r(p_dim);
      for (Eigen::Index k = 0; k < p_dim; ++k) dt(k) = s * rt(k) / (theta * (eigvals(k) + hxi) * s + e);
      d(p_dim) = s;
    }
    d.head(p_dim) = eigvecs * dt;
    return d;
  }

  Secular secular_for(const Vector& r) const {
    const Vector rt = eigvecs.transpose() * r.head(p_dim);
    Secular eq;
    eq.w = rt.array().square();
    if (map == Map::Ball) {
      eq.c = theta * eigvals;
      eq.e = sigma;
      eq.s_lo = 0.0;
    } else {
      eq.c = theta * (eigvals.array() + hxi);
      eq.e = sigma - r(p_dim);
      eq.s_lo = std::max(0.0, -eq.e / (theta * hxi));
    }
    return eq;
  }

  void diagnose(const Vector& r, const Vector& d, StepDiagnostics& diag) const {
    const Vector q = r - theta * problem.energy.apply(d);
    diag.feasibility = problem.psi.distance_to_cstar(q);
    const ExtendedReal psi_d = problem.psi.eval(d, options.tol);
    diag.dissipation = psi_d.as_double();
    diag.residual = psi_d.is_finite() ? psi_d.value() - q.dot(d) : std::numeric_limits<double>::infinity();
  }

  bool certified(const Vector& r, const StepDiagnostics& diag, double residual_budget) const {
    const Vector q_norm_proxy = r;  // |q| <= |r| + theta |A d|; r is the scale used for tolerances
    return diag.feasibility <= options.tol.feas(q_norm_proxy.norm()) &&
           std::abs(diag.residual) <= residual_budget;
  }

  // Closed-form part: returns the elastic / interior step or solves the
  // secular equation exactly.
  std::optional<Vector> return_map(const Vector& r, int* iterations) const {
    if (map == Map::None) return std::nullopt;
    *iterations = 0;
    if (map == Map::Ball) {
      if (r.norm() <= sigma) return Vector::Zero(r.size());
    } else {
      const double np = r.head(p_dim).norm();
      const double rxi = r(p_dim);
      if (np + rxi <= sigma) return Vector::Zero(r.size());
      const double e = sigma - rxi;
      if (e < 0.0) {
        Vector d(r.size());
        d.head(p_dim) = eigvecs * ((eigvecs.transpose() * r.head(p_dim)).array() / (theta * eigvals.array())).matrix();
        d(p_dim) = -e / (theta * hxi);
        if (d.head(p_dim).norm() <= d(p_dim)) return d;
      }
    }
    const Secular eq = secular_for(r);
    const double s = solve_secular(eq, iterations);
    return step_for(r, s);
  }

  StepResult proximal_gradient(const Vector& r, const Vector& start, double residual_budget,
                               bool throw_on_failure) const {
    const Matrix& a = problem.energy.matrix();
    Vector d = start;
    StepResult res;
    for (int k = 1; k <= options.max_iter; ++k) {
      const Vector grad = theta * (a * d) - r;
      d = problem.psi.prox(d - prox_step * grad, prox_step);
      if (k % 4 == 0 || k == 1) {
        diagnose(r, d, res.diagnostics);
        res.diagnostics.iterations = k;
        if (certified(r, res.diagnostics, residual_budget)) {
          res.y = d;
          return res;
        }
      }
    }
    diagnose(r, d, res.diagnostics);
    res.diagnostics.iterations = options.max_iter;
    if (throw_on_failure) {
      std::ostringstream msg;
      msg << "incremental step: proximal gradient did not converge in " << options.max_iter
          << " iterations (residual " << res.diagnostics.residual << ", feasibility "
          << res.diagnostics.feasibility << ")";
      throw NonConvergence(msg.str(), std::max(std::abs(res.diagnostics.residual), res.diagnostics.feasibility));
    }
    res.y = d;
    return res;
  }

  Vector trial(const Vector& y_prev, double t_theta) const {
    require_dim(y_prev.size(), problem.dimension(), "incremental step y_prev");
    require(problem.psi.in_domain(y_prev, options.tol), "incremental step: y_prev must lie in the domain cone C");
    return problem.stress(t_theta, y_prev);
  }

  StepResult solve(const Vector& y_prev, double t_theta) const {
    const Vector r = trial(y_prev, t_theta);
    const double budget = options.tol.kkt(problem.load(t_theta).norm());
    int iters = 0;
    if (auto d = return_map(r, &iters)) {
      StepResult res;
      diagnose(r, *d, res.diagnostics);
      res.diagnostics.iterations = iters;
      if (certified(r, res.diagnostics, budget)) {
        res.y = y_prev + *d;
        return res;
      }
      StepResult polished = proximal_gradient(r, *d, budget, true);
      polished.y = y_prev + polished.y;
      return polished;
    }
    StepResult res = proximal_gradient(r, Vector::Zero(r.size()), budget, true);
    res.y = y_prev + res.y;
    return res;
  }

  StepResult solve_inexact(const Vector& y_prev, double t_theta, double budget) const {
    const Vector r = trial(y_prev, t_theta);
    const double exact_budget = options.tol.kkt(problem.load(t_theta).norm());
    budget = std::max(budget, exact_budget);
    if (map == Map::None) {
      StepResult res = proximal_gradient(r, Vector::Zero(r.size()), budget, true);
      res.y = y_prev + res.y;
      return res;
    }
    int iters = 0;
    const auto exact = return_map(r, &iters);
    StepResult res;
    diagnose(r, *exact, res.diagnostics);
    const bool plastic_root = !exact->isZero(0.0) && !(map == Map::Cone && exact->head(p_dim).norm() < (*exact)(p_dim));
    if (!plastic_root) {
      res.diagnostics.iterations = iters;
      res.y = y_prev + *exact;
      return res;
    }
    // Bisection from the feasible side of the secular equation: every
    // iterate keeps its stress in C* and its step in C, and the residual
    // decreases to zero as the bracket closes on the root.
    const Secular eq = secular_for(r);
    double lo = eq.s_lo;
    double hi = eq.upper();
    for (int k = 1; k <= 2000; ++k) {
      Vector d = step_for(r, hi);
      diagnose(r, d, res.diagnostics);
      res.diagnostics.iterations = k;
      if (certified(r, res.diagnostics, budget)) {
        res.y = y_prev + d;
        return res;
      }
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (eq.h(mid) >= 0.0) hi = mid; else lo = mid;
    }
    diagnose(r, *exact, res.diagnostics);
    res.y = y_prev + *exact;
    return res;
  }
};

IncrementalSolver::IncrementalSolver(const Problem& problem, double theta, SolverOptions options)
    : impl_(std::make_unique<Impl>(problem, theta, options)) {}
IncrementalSolver::~IncrementalSolver() = default;
IncrementalSolver::IncrementalSolver(IncrementalSolver&&) noexcept = default;

StepResult IncrementalSolver::solve(const Vector& y_prev, double t_theta) const {
  return impl_->solve(y_prev, t_theta);
}

StepResult IncrementalSolver::solve_inexact(const Vector& y_prev, double t_theta, double budget) const {
  require(budget > 0.0, "inexact step budget must be positive");
  return impl_->solve_inexact(y_prev, t_theta, budget);
}

bool IncrementalSolver::uses_return_map() const { return impl_->map != Impl::Map::None; }

StepResult incremental_step(const Problem& problem, const Vector& y_prev, double t_theta,
                            double theta, const SolverOptions& options) {
  return IncrementalSolver(problem, theta, options).solve(y_prev, t_theta);
}

namespace {

void check_partition(const Problem& problem, const Partition& partition) {
  const double t = problem.horizon();
  require(std::abs(partition.horizon() - t) <= 1e-12 * t,
          "partition must end at the load horizon T");
}

template <class Step>
Trajectory run(const Problem& problem, const Partition& partition, double theta,
               const SolverOptions& options, Step&& step) {
  check_theta(theta, options);
  validate_problem(problem, options.tol);
  check_partition(problem, partition);
  const IncrementalSolver solver(problem, theta, options);
  Trajectory traj{partition, {}, {}, theta};
  traj.states.reserve(static_cast<std::size_t>(partition.steps()) + 1);
  traj.diagnostics.reserve(static_cast<std::size_t>(partition.steps()));
  traj.states.push_back(problem.y0);
  for (int i = 1; i <= partition.steps(); ++i) {
    StepResult r = step(solver, traj.states.back(), partition.theta_time(i, theta));
    traj.states.push_back(std::move(r.y));
    traj.diagnostics.push_back(r.diagnostics);
  }
  return traj;
}

}  // namespace

Trajectory solve_theta(const Problem& problem, const Partition& partition, double theta,
                       const SolverOptions& options) {
  return run(problem, partition, theta, options,
             [](const IncrementalSolver& s, const Vector& y, double t) { return s.solve(y, t); });
}

Trajectory solve_theta_inexact(const Problem& problem, const Partition& partition, double theta,
                               double inner_tol, const SolverOptions& options) {
  require(inner_tol > 0.0 && std::isfinite(inner_tol), "inner_tol must be positive");
  const double budget = inner_tol / partition.steps();
  return run(problem, partition, theta, options,
             [budget](const IncrementalSolver& s, const Vector& y, double t) {
               return s.solve_inexact(y, t, budget);
             });
}

}  // namespace ratecert
