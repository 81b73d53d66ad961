#pragma once

#include "ratecert/types.hpp"

#include <vector>

namespace ratecert {

struct LoadKnot {
  double time;
  Vector value;
};

/// Piecewise-linear load t -> l(t) on [0, T].
class LoadPath {
 public:
  LoadPath(std::vector<LoadKnot> knots, double horizon);

  /// Constant-rate ramp l(t) = t * rate on [0, T].
  static LoadPath ramp(const Vector& rate, double horizon);
  static LoadPath zero(Eigen::Index dimension, double horizon);

  Vector operator()(double t) const;
  /// Exact mean of l over [a, b] (a < b), summing affine pieces.
  Vector mean(double a, double b) const;
  /// Exact integral of <l'(t), y(t)> over [a, b] for y affine on [a, b]
  /// with y(a) = ya, y(b) = yb.
  double integral_derivative_pairing(double a, double b, const Vector& ya, const Vector& yb) const;

  double horizon() const { return horizon_; }
  Eigen::Index dimension() const { return knots_.front().value.size(); }
  const std::vector<LoadKnot>& knots() const { return knots_; }
  /// max over segments of |l_{k+1} - l_k| / (t_{k+1} - t_k), restricted to [0, T].
  double lipschitz_bound() const { return lipschitz_; }
  /// sup norm over [0, T] (attained at knots or at T).
  double sup_norm() const;
  /// Knot times strictly inside (a, b).
  std::vector<double> breakpoints_in(double a, double b) const;

  /// Same load seen through the time change s = map(t), where map is
  /// piecewise linear and strictly increasing with map(0) = 0.
  LoadPath reparametrized(const std::vector<double>& from, const std::vector<double>& to) const;

 private:
  std::vector<LoadKnot> knots_;
  double horizon_;
  double lipschitz_ = 0.0;
};

}  // namespace ratecert
