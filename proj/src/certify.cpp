#include "ratecert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace ratecert {

Certificate make_certificate(const Problem& problem, ExtendedReal functional_value) {
  Certificate c;
  // Rounding can leave a tiny negative sum of Fenchel gaps.
  if (functional_value.is_finite() && functional_value.value() < 0.0) functional_value = 0.0;
  c.functional_value = functional_value;
  c.alpha = problem.alpha();
  c.scope = problem.energy.scope();
  c.applicable = c.scope != CoercivityScope::OnC;
  c.uniform_phi_bound = functional_value;
  if (!c.applicable || functional_value.is_infinite()) {
    c.uniform_norm_bound = ExtendedReal::infinity();
  } else {
    c.uniform_norm_bound = std::sqrt(2.0 * functional_value.value() / c.alpha);
  }
  return c;
}

Certificate certify_distance(const Problem& problem, const Trajectory& candidate, double theta,
                             const Tolerances& tol) {
  const FunctionalReport rep = eval_Fn_theta(problem, candidate.states, candidate.partition, theta, tol);
  return make_certificate(problem, rep.total);
}

LipschitzReport verify_lipschitz(const Problem& problem, const Trajectory& traj, double theta) {
  LipschitzReport rep;
  const Partition& part = traj.partition;
  for (int i = 1; i <= part.steps(); ++i) {
    const double slope = (traj.states[static_cast<std::size_t>(i)] - traj.states[static_cast<std::size_t>(i - 1)]).norm() /
                         part.step(i);
    if (slope > rep.max_slope || rep.worst_interval == 0) {
      rep.max_slope = std::max(rep.max_slope, slope);
      rep.worst_interval = i;
    }
  }
  rep.load_lipschitz = problem.load.lipschitz_bound();
  const double alpha = problem.alpha();
  const bool endpoint = std::abs(theta - 1.0) <= 1e-12 || std::abs(theta - 0.5) <= 1e-12;
  if (problem.energy.scope() == CoercivityScope::OnC) {
    rep.note = "coercivity is only declared on C";
  } else if (endpoint) {
    rep.applicable = true;
    rep.bound = rep.load_lipschitz / alpha;
  } else if (theta > 0.5 && theta < 1.0) {
    if (part.constant_steps()) {
      rep.applicable = true;
      rep.bound = rep.load_lipschitz / (alpha * (2.0 * theta - 1.0));
    } else {
      rep.note = "bound for theta in (1/2,1) needs constant steps";
    }
  } else {
    rep.note = "no bound for this theta";
  }
  if (rep.applicable) rep.margin = rep.bound - rep.max_slope;
  return rep;
}

AdaptResult adapt_partition(const Problem& problem, double theta, double tol, int max_rounds,
                            const AdaptOptions& options) {
  require(tol > 0.0 && std::isfinite(tol), "adapt: tol must be positive");
  require(max_rounds >= 0, "adapt: max_rounds must be nonnegative");
  require(options.budget_divisor > 0.0, "adapt: budget divisor must be positive");
  require(problem.energy.scope() != CoercivityScope::OnC,
          "adapt: coercivity on C - C or on the whole space is required");
  Partition part = options.initial_partition ? *options.initial_partition
                                             : Partition::uniform(problem.horizon(), options.initial_steps);
  std::vector<double> midpoints;
  std::vector<AdaptRound> rounds;
  for (int round = 0;; ++round) {
    Trajectory traj = solve_theta(problem, part, theta, options.solver);
    const FunctionalReport rep = eval_F(problem, traj, QuadratureRule::exact(), options.solver.tol);
    const double budget = problem.alpha() * tol * tol / (options.budget_divisor * part.steps());
    std::vector<int> flagged;
    for (int i = 1; i <= part.steps(); ++i) {
      if (!(rep.per_interval[static_cast<std::size_t>(i - 1)] <= budget)) flagged.push_back(i);
    }
    // Infeasible intervals keep a finite local value; they must be split as well.
    for (const auto& v : rep.feasibility_violations) flagged.push_back(v.interval);
    std::sort(flagged.begin(), flagged.end());
    flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
    rounds.push_back({part.steps(), budget, static_cast<int>(flagged.size()), rep.total});
    if (flagged.empty() || round == max_rounds) {
      AdaptResult out{part, std::move(traj), make_certificate(problem, rep.total), rep.per_interval,
                      std::move(rounds), std::move(midpoints), false};
      out.certificate.per_interval_budget = budget;
      out.converged = flagged.empty() && rep.feasible();
      return out;
    }
    for (int i : flagged) midpoints.push_back(0.5 * (part.time(i - 1) + part.time(i)));
    part = part.bisect(flagged);
  }
}

Oracle reference_oracle(const Problem& problem, int steps, const SolverOptions& options) {
  auto traj = std::make_shared<Trajectory>(
      solve_theta(problem, Partition::uniform(problem.horizon(), steps), 1.0, options));
  return [traj](double t) { return traj->interpolate(t); };
}

double uniform_error(const Trajectory& traj, const Oracle& oracle, int samples_per_interval) {
  require(samples_per_interval >= 0, "sample count must be nonnegative");
  const Partition& part = traj.partition;
  double err = (traj.states.front() - oracle(part.time(0))).norm();
  for (int i = 1; i <= part.steps(); ++i) {
    for (int k = 1; k <= samples_per_interval + 1; ++k) {
      const double t = k == samples_per_interval + 1
                           ? part.time(i)
                           : part.time(i - 1) + part.step(i) * k / (samples_per_interval + 1);
      err = std::max(err, (traj.interpolate(t) - oracle(t)).norm());
    }
  }
  return err;
}

ConvergenceReport convergence_study(const Problem& problem, double theta,
                                    const std::vector<int>& refinements, const Oracle& oracle,
                                    const ConvergenceOptions& options) {
  require(refinements.size() >= 3, "convergence study needs at least 3 refinement levels");
  for (int n : refinements) require(n >= 1, "refinement levels must be positive step counts");
  require(static_cast<bool>(oracle), "convergence study needs an oracle");
  ConvergenceReport rep;
  rep.required_slope = options.required_slope;
  for (int n : refinements) {
    const Partition part = Partition::uniform(problem.horizon(), n);
    const Trajectory traj = solve_theta(problem, part, theta, options.solver);
    double scale = 0.0;
    for (double t : part.times()) scale = std::max(scale, oracle(t).norm());
    const double err = uniform_error(traj, oracle, options.samples_per_interval);
    const double floor = options.floor_rel * (1.0 + scale);
    rep.floor = std::max(rep.floor, floor);
    rep.levels.push_back({n, part.step(1), err, err <= floor});
  }
  auto fit = [](const std::vector<std::pair<double, double>>& pts) -> std::optional<double> {
    if (pts.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) { mx += x; my += y; }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) { sxy += (x - mx) * (y - my); sxx += (x - mx) * (x - mx); }
    if (sxx <= 0.0) return std::nullopt;
    return sxy / sxx;
  };
  std::vector<std::pair<double, double>> pts, clamped;
  for (const auto& l : rep.levels) {
    if (!l.at_floor) pts.emplace_back(std::log(l.tau), std::log(l.error));
    clamped.emplace_back(std::log(l.tau), std::log(std::max(l.error, rep.floor)));
  }
  rep.slope = fit(pts);
  rep.clamped_slope = fit(clamped);
  if (rep.slope) {
    rep.slope_tested = true;
    rep.passed = *rep.slope >= rep.required_slope;
  }
  return rep;
}

}  // namespace ratecert
