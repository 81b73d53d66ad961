#pragma once

#include "ratecert/types.hpp"

#include <functional>
#include <string>

namespace ratecert {

/// Set on which the coercivity constant alpha is claimed.
enum class CoercivityScope {
  OnC,        ///< phi(y) >= alpha/2 |y|^2 for y in the domain cone C
  OnCMinusC,  ///< ... for y in C - C; enough for distance certificates
  Global,     ///< ... for all y
};

std::string to_string(CoercivityScope scope);

/// Quadratic energy phi(y) = 1/2 <A y, y> with a declared coercivity
/// constant.  Construction checks symmetry, positive semidefiniteness, and
/// for Global scope that alpha does not exceed the smallest eigenvalue.
class QuadraticEnergy {
 public:
  QuadraticEnergy(Matrix a, double alpha, CoercivityScope scope);

  const Matrix& matrix() const { return a_; }
  double alpha() const { return alpha_; }
  CoercivityScope scope() const { return scope_; }
  Eigen::Index dimension() const { return a_.rows(); }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

  double phi(const Vector& y) const;
  Vector apply(const Vector& y) const;

 private:
  Matrix a_;
  double alpha_;
  CoercivityScope scope_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

double eval_phi(const QuadraticEnergy& energy, const Vector& y);
Vector apply_A(const QuadraticEnergy& energy, const Vector& y);

/// Draws one nonzero element of the cone on which alpha is to be checked.
using ConeSampler = std::function<Vector()>;

/// min over samples of 2 phi(y) / |y|^2.
double estimate_alpha(const QuadraticEnergy& energy, const ConeSampler& sampler, int n_samples);

}  // namespace ratecert
