#pragma once

#include "ratecert/materials.hpp"

#include <cstdint>
#include <random>

namespace ratecert::testing {

inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng, double min_eig) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = g(rng);
  Matrix s = m * m.transpose() / static_cast<double>(n) + min_eig * Matrix::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

/// Random material model of the given kind with p_dim = 2.
inline MaterialModel random_model(HardeningKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  MaterialModel m;
  m.kind = kind;
  m.p_dim = 2;
  m.elastic_C = random_spd(2, rng, 0.5);
  m.hardening_Hp = kind == HardeningKind::Isotropic ? Matrix::Zero(2, 2) : random_spd(2, rng, 0.2);
  m.hardening_hxi = kind == HardeningKind::Kinematic ? 0.0 : u(rng);
  m.sigma_y = u(rng);
  return m;
}

/// Piecewise-linear load starting at 0 with `pieces` random segments on
/// [0, T]; only the p-block is loaded.
inline LoadPath random_load(Eigen::Index state_dim, Eigen::Index p_dim, double horizon, int pieces,
                            double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<LoadKnot> knots{{0.0, Vector::Zero(state_dim)}};
  for (int k = 1; k <= pieces; ++k) {
    Vector v = Vector::Zero(state_dim);
    for (Eigen::Index i = 0; i < p_dim; ++i) v(i) = amplitude * g(rng);
    knots.push_back({horizon * k / pieces, v});
  }
  return LoadPath(std::move(knots), horizon);
}

inline Problem random_material_problem(HardeningKind kind, std::uint64_t seed, double horizon = 1.0) {
  std::mt19937_64 rng(seed);
  const MaterialModel m = random_model(kind, rng);
  const LoadPath load = random_load(m.state_dimension(), m.p_dim, horizon, 5, 3.0 * m.sigma_y, rng);
  return assemble(m, load, Vector::Zero(m.state_dimension()));
}

/// Scalar kinematic ramp problem: a = 1, sigma = 1, l(t) = t, T = 2.
inline Problem ramp_problem() {
  const MaterialModel m = MaterialModel::isotropic_tensors(HardeningKind::Kinematic, 1, 0.5, 0.5, 0.0, 1.0);
  return assemble(m, LoadPath::ramp(Vector::Ones(1), 2.0), Vector::Zero(1));
}

inline Vector ramp_exact(double t) { return Vector::Constant(1, analytic_1d(1.0, 1.0, 1.0, t)); }

/// 4D problem with a random SPD operator and a Euclidean ball of radius 1.
inline Problem synthetic_4d(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix a = random_spd(4, rng, 0.5);
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff();
  LoadPath load = random_load(4, 4, 1.0, 4, 3.0, rng);
  return Problem{QuadraticEnergy(a, lmin, CoercivityScope::Global),
                 DissipationPotential(CharacteristicSet::norm_ball(1.0, 4)), std::move(load), Vector::Zero(4)};
}

}  // namespace ratecert::testing
