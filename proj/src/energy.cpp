#include "ratecert/energy.hpp"

#include <algorithm>
#include <limits>

namespace ratecert {

std::string to_string(CoercivityScope scope) {
  switch (scope) {
    case CoercivityScope::OnC: return "on_C";
    case CoercivityScope::OnCMinusC: return "on_C_minus_C";
    case CoercivityScope::Global: return "global";
  }
  return "unknown";
}

QuadraticEnergy::QuadraticEnergy(Matrix a, double alpha, CoercivityScope scope)
    : a_(std::move(a)), alpha_(alpha), scope_(scope) {
  require(a_.rows() >= 1 && a_.rows() == a_.cols(), "energy matrix must be square and nonempty");
  require(a_.allFinite(), "energy matrix has non-finite entries");
  const double norm = a_.norm();
  require((a_ - a_.transpose()).norm() <= 1e-12 * norm, "energy matrix must be symmetric");
  // Symmetrize exactly so that <Ay, z> = <Az, y> holds to rounding.
  a_ = 0.5 * (a_ + a_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a_, Eigen::EigenvaluesOnly);
  lambda_min_ = eig.eigenvalues().minCoeff();
  lambda_max_ = eig.eigenvalues().maxCoeff();
  require(lambda_min_ >= -1e-10 * norm, "energy matrix must be positive semidefinite");
  require(alpha_ > 0.0 && std::isfinite(alpha_), "coercivity constant alpha must be positive");
  if (scope_ == CoercivityScope::Global) {
    require(alpha_ <= lambda_min_ + 1e-8 * (1.0 + norm),
            "declared alpha exceeds the smallest eigenvalue of A");
  }
}

double QuadraticEnergy::phi(const Vector& y) const {
  require_dim(y.size(), dimension(), "phi");
  return 0.5 * y.dot(a_ * y);
}

Vector QuadraticEnergy::apply(const Vector& y) const {
  require_dim(y.size(), dimension(), "apply_A");
  return a_ * y;
}

double eval_phi(const QuadraticEnergy& energy, const Vector& y) { return energy.phi(y); }

Vector apply_A(const QuadraticEnergy& energy, const Vector& y) { return energy.apply(y); }

double estimate_alpha(const QuadraticEnergy& energy, const ConeSampler& sampler, int n_samples) {
  require(n_samples > 0, "estimate_alpha: empty sample set");
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    const Vector y = sampler();
    const double n2 = y.squaredNorm();
    require(n2 > 0.0, "estimate_alpha: sampler produced the zero vector");
    best = std::min(best, 2.0 * energy.phi(y) / n2);
  }
  return best;
}

}  // namespace ratecert
