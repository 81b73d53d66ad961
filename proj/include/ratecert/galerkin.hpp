#pragma once

#include "ratecert/certify.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ratecert {

/// Subspace Y_h of R^N spanned by the orthonormal columns of an N x k basis.
class Subspace {
 public:
  explicit Subspace(Matrix basis, double orthonormality_tol = 1e-12);

  static Subspace full(Eigen::Index n);
  /// Span of the given coordinate axes, kept in increasing order.
  static Subspace coordinates(Eigen::Index n, std::vector<Eigen::Index> axes);
  /// Nested chain of dimensions 1..n: the first k columns of one seeded
  /// random orthogonal matrix.
  static std::vector<Subspace> random_chain(Eigen::Index n, std::uint64_t seed);
  /// Nested chain of coordinate spans {e_1}, {e_1, e_2}, ..., R^n.
  static std::vector<Subspace> coordinate_chain(Eigen::Index n);

  const Matrix& basis() const { return basis_; }
  Eigen::Index dimension() const { return basis_.cols(); }
  Eigen::Index parent_dimension() const { return basis_.rows(); }
  /// Coordinate axes when the basis is a column selection of the identity.
  const std::optional<std::vector<Eigen::Index>>& axes() const { return axes_; }

  Vector lift(const Vector& coords) const { return basis_ * coords; }
  Vector project(const Vector& y) const { return basis_.transpose() * y; }
  bool contains(const Subspace& other, double tol = 1e-10) const;

 private:
  Matrix basis_;
  std::optional<std::vector<Eigen::Index>> axes_;
};

enum class PsiMode {
  Restrict,  ///< psi_h = psi o B
  Custom,    ///< psi_h supplied by the caller
};

struct Restriction {
  Problem problem;
  Subspace space;
  /// alpha_h had to be re-estimated because the restricted operator lost
  /// coercivity on the whole subspace.
  bool alpha_reestimated = false;
};

/// Problem posed in the coordinates of Y_h: A_h = B^T A B, l_h = B^T l,
/// y0_h = B^T y0.  Restrict mode supports a full-space norm ball with any
/// basis and coordinate spans for every characteristic-set kind whose
/// projection stays representable.
Restriction restrict(const Problem& problem, const Subspace& space, PsiMode mode = PsiMode::Restrict,
                     const std::optional<DissipationPotential>& custom_psi = std::nullopt);

/// Lifts every state of a restricted trajectory back to R^N.
Trajectory lift(const Trajectory& traj, const Subspace& space);

struct NestedLevel {
  Eigen::Index dimension;
  double distance;          ///< max over nodes of |B y_h^i - y^i|
  ExtendedReal functional;  ///< F_n^theta of the restricted run on its own problem
  double energy_residual;
};

struct NestedReport {
  std::vector<NestedLevel> levels;
  double final_distance() const { return levels.back().distance; }
};

/// Solves the theta-scheme on every level of a nested chain whose last
/// element is the whole space and compares with the full-space run.
NestedReport nested_convergence(const Problem& problem, const std::vector<Subspace>& chain,
                                const Partition& partition, double theta,
                                const SolverOptions& options = {});

struct DiagonalEntry {
  Eigen::Index dimension;
  int steps;
  double error;  ///< uniform error of the lifted interpolant against the oracle
};

/// Simultaneous space-time refinement: level k pairs chain[k] with
/// steps[k] time steps.
std::vector<DiagonalEntry> space_time_diagonal(const Problem& problem, const std::vector<Subspace>& chain,
                                               const std::vector<int>& steps, double theta,
                                               const Oracle& oracle, const SolverOptions& options = {});

}  // namespace ratecert
