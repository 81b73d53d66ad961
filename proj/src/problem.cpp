#include "ratecert/problem.hpp"

#include <sstream>

namespace ratecert {

void validate_problem(const Problem& problem, const Tolerances& tol) {
  const Eigen::Index n = problem.dimension();
  require_dim(problem.psi.dimension(), n, "dissipation potential");
  require_dim(problem.load.dimension(), n, "load");
  require_dim(problem.y0.size(), n, "y0");
  require(problem.y0.allFinite(), "y0 has non-finite entries");
  require(problem.psi.in_domain(problem.y0, tol), "y0 must lie in the domain cone C");
  const Vector s0 = problem.stress(0.0, problem.y0);
  const double dist = problem.psi.distance_to_cstar(s0);
  if (dist > tol.feas(s0.norm())) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "initial datum is not stable: dist_to_cstar(l(0) - A y0) = " << dist;
    throw ContractViolation(msg.str());
  }
}

}  // namespace ratecert
