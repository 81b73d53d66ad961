#pragma once

#include "ratecert/problem.hpp"

#include <string>

namespace ratecert {

enum class HardeningKind { Kinematic, Isotropic, Combined };

std::string to_string(HardeningKind kind);
HardeningKind hardening_kind_from_string(const std::string& name);

/// Material-point model of linearized elastoplasticity with linear
/// hardening.  The state is y = p for kinematic hardening and y = (p, xi)
/// with a scalar internal variable otherwise.
struct MaterialModel {
  HardeningKind kind = HardeningKind::Kinematic;
  Eigen::Index p_dim = 1;
  Matrix elastic_C;     ///< SPD, p_dim x p_dim
  Matrix hardening_Hp;  ///< PSD, p_dim x p_dim
  double hardening_hxi = 0.0;
  double sigma_y = 1.0;

  Eigen::Index state_dimension() const {
    return kind == HardeningKind::Kinematic ? p_dim : p_dim + 1;
  }
  /// Scalar multiples of the identity on the p-block.
  static MaterialModel isotropic_tensors(HardeningKind kind, Eigen::Index p_dim, double c,
                                         double hp, double hxi, double sigma_y);
};

/// Throws ContractViolation when the model breaks the invariants of its kind.
void validate_model(const MaterialModel& model);

/// A = blockdiag(C + Hp, hxi) and psi with C* = {|q| <= sigma_y} (kinematic)
/// or {|q| + g <= sigma_y} (isotropic, combined); alpha = lambda_min(A).
Problem assemble(const MaterialModel& model, const LoadPath& load, const Vector& y0);

/// Load l = (C eps(t), 0) induced by a piecewise-linear total strain path
/// given on the p-block.
LoadPath strain_driven_load(const MaterialModel& model, const LoadPath& strain);

/// Closed-form play-operator solution of sigma d|.|(y') + a y = rate * t,
/// y(0) = 0, for nonnegative rate.
double analytic_1d(double a, double sigma, double ramp_rate, double t);

}  // namespace ratecert
