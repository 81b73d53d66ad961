#include "ratecert/materials.hpp"

#include <sstream>

namespace ratecert {

std::string to_string(HardeningKind kind) {
  switch (kind) {
    case HardeningKind::Kinematic: return "kinematic";
    case HardeningKind::Isotropic: return "isotropic";
    case HardeningKind::Combined: return "combined";
  }
  return "unknown";
}

HardeningKind hardening_kind_from_string(const std::string& name) {
  if (name == "kinematic") return HardeningKind::Kinematic;
  if (name == "isotropic") return HardeningKind::Isotropic;
  if (name == "combined") return HardeningKind::Combined;
  throw ContractViolation("unknown hardening kind '" + name + "'");
}

MaterialModel MaterialModel::isotropic_tensors(HardeningKind kind, Eigen::Index p_dim, double c,
                                               double hp, double hxi, double sigma_y) {
  MaterialModel m;
  m.kind = kind;
  m.p_dim = p_dim;
  m.elastic_C = c * Matrix::Identity(p_dim, p_dim);
  m.hardening_Hp = hp * Matrix::Identity(p_dim, p_dim);
  m.hardening_hxi = hxi;
  m.sigma_y = sigma_y;
  return m;
}

namespace {

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool symmetric(const Matrix& m) { return (m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm()); }

}  // namespace

void validate_model(const MaterialModel& m) {
  require(m.p_dim >= 1, "model.p_dim must be >= 1");
  require(m.elastic_C.rows() == m.p_dim && m.elastic_C.cols() == m.p_dim,
          "model.elastic_C must be p_dim x p_dim");
  require(m.hardening_Hp.rows() == m.p_dim && m.hardening_Hp.cols() == m.p_dim,
          "model.Hp must be p_dim x p_dim");
  require(symmetric(m.elastic_C) && min_eigenvalue(m.elastic_C) > 0.0,
          "model.elastic_C must be symmetric positive definite");
  require(symmetric(m.hardening_Hp) && min_eigenvalue(m.hardening_Hp) >= -1e-12 * (1.0 + m.hardening_Hp.norm()),
          "model.Hp must be symmetric positive semidefinite");
  require(m.sigma_y > 0.0 && std::isfinite(m.sigma_y), "model.sigma_y must be positive");
  require(m.hardening_hxi >= 0.0, "model.h_xi must be >= 0");
  switch (m.kind) {
    case HardeningKind::Kinematic:
      require(min_eigenvalue(m.hardening_Hp) > 0.0, "kinematic hardening needs Hp positive definite");
      require(m.hardening_hxi == 0.0, "kinematic hardening needs h_xi = 0");
      break;
    case HardeningKind::Isotropic:
      require(m.hardening_Hp.isZero(0.0), "isotropic hardening needs Hp = 0");
      require(m.hardening_hxi > 0.0, "isotropic hardening needs h_xi > 0");
      break;
    case HardeningKind::Combined:
      require(min_eigenvalue(m.hardening_Hp) > 0.0, "combined hardening needs Hp positive definite");
      require(m.hardening_hxi > 0.0, "combined hardening needs h_xi > 0");
      break;
  }
}

Problem assemble(const MaterialModel& model, const LoadPath& load, const Vector& y0) {
  validate_model(model);
  const Eigen::Index n = model.state_dimension();
  require_dim(load.dimension(), n, "load");
  require_dim(y0.size(), n, "y0");

  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(model.p_dim, model.p_dim) = model.elastic_C + model.hardening_Hp;
  if (model.kind != HardeningKind::Kinematic) a(model.p_dim, model.p_dim) = model.hardening_hxi;
  a = 0.5 * (a + a.transpose()).eval();

  // With C positive definite on the p-block every model is coercive on the
  // whole state space at material-point scale.
  const double alpha = min_eigenvalue(a);
  require(alpha > 0.0, "assembled energy is not coercive");

  CharacteristicSet cstar = model.kind == HardeningKind::Kinematic
                                ? CharacteristicSet::norm_ball(model.sigma_y, n)
                                : CharacteristicSet::cone_capped(model.sigma_y, model.p_dim);

  Problem problem{QuadraticEnergy(a, alpha, CoercivityScope::Global),
                  DissipationPotential(std::move(cstar)), load, y0};
  validate_problem(problem);
  return problem;
}

LoadPath strain_driven_load(const MaterialModel& model, const LoadPath& strain) {
  validate_model(model);
  require_dim(strain.dimension(), model.p_dim, "strain path");
  std::vector<LoadKnot> knots;
  for (const auto& k : strain.knots()) {
    Vector v = Vector::Zero(model.state_dimension());
    v.head(model.p_dim) = model.elastic_C * k.value;
    knots.push_back({k.time, std::move(v)});
  }
  return LoadPath(std::move(knots), strain.horizon());
}

double analytic_1d(double a, double sigma, double ramp_rate, double t) {
  require(a > 0.0 && sigma > 0.0, "analytic_1d: a and sigma must be positive");
  require(t >= 0.0 && ramp_rate >= 0.0, "analytic_1d: t and ramp_rate must be nonnegative");
  const double load = ramp_rate * t;
  return load <= sigma ? 0.0 : (load - sigma) / a;
}

}  // namespace ratecert
