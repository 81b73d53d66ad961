#pragma once

#include "ratecert/types.hpp"

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

namespace ratecert {

/// Closed convex set C* containing the origin.  A positively 1-homogeneous
/// dissipation potential is the support function of such a set, and its
/// conjugate is the indicator of the set.
///
/// Kinds:
///   - NormBall: {q : |q_B| <= r, q_j = 0 off the block B}.  The support
///     function is r |v_B| and is finite everywhere.
///   - ConeCapped: {(q, g) : |q| + g <= sigma}, q in R^p, g in R.  Its support
///     function is sigma * g' on the cone {|p'| <= g'} and +inf elsewhere.
///   - Halfspaces: {q : <n_k, q> <= b_k}, all b_k >= 0.
///   - Product: cartesian product of sets on consecutive blocks.
class CharacteristicSet {
 public:
  struct NormBall {
    double radius;
    Eigen::Index dimension;
    Eigen::Index block_offset;
    Eigen::Index block_size;
  };
  struct ConeCapped {
    double sigma;
    Eigen::Index p_dim;
  };
  struct Halfspaces {
    Matrix normals;  ///< one row per constraint
    Vector offsets;
  };
  struct Product {
    std::vector<CharacteristicSet> factors;
  };
  enum class Kind { NormBall, ConeCapped, Halfspaces, Product };

  static CharacteristicSet norm_ball(double radius, Eigen::Index dimension);
  static CharacteristicSet norm_ball(double radius, Eigen::Index dimension,
                                     Eigen::Index block_offset, Eigen::Index block_size);
  static CharacteristicSet cone_capped(double sigma, Eigen::Index p_dim);
  static CharacteristicSet halfspaces(Matrix normals, Vector offsets);
  static CharacteristicSet product(std::vector<CharacteristicSet> factors);

  Kind kind() const;
  Eigen::Index dimension() const { return dimension_; }

  const NormBall* as_norm_ball() const { return std::get_if<NormBall>(&data_); }
  const ConeCapped* as_cone_capped() const { return std::get_if<ConeCapped>(&data_); }
  const Halfspaces* as_halfspaces() const { return std::get_if<Halfspaces>(&data_); }
  const Product* as_product() const { return std::get_if<Product>(&data_); }

  /// sup_{q in C*} <q, v>.
  ExtendedReal support(const Vector& v, const Tolerances& tol = {}) const;
  /// An element of C* attaining the support value (a subgradient of the
  /// support function at v).  Requires support(v) finite.
  Vector maximizer(const Vector& v, const Tolerances& tol = {}) const;
  /// Euclidean nearest point of C*.
  Vector project(const Vector& q) const;
  double distance(const Vector& q) const;
  /// Membership of v in the domain cone C = {support < inf}.
  bool in_domain(const Vector& v, const Tolerances& tol = {}) const;
  /// Point of C*, drawn by projecting a Gaussian of the given scale and
  /// occasionally snapping to an extreme point.
  Vector sample(std::mt19937_64& rng, double scale) const;

 private:
  using Data = std::variant<NormBall, ConeCapped, Halfspaces, Product>;
  CharacteristicSet(Data data, Eigen::Index dimension)
      : data_(std::move(data)), dimension_(dimension) {}

  Data data_;
  Eigen::Index dimension_ = 0;
};

/// Dissipation potential psi = support function of a characteristic set.
/// Immutable; all member functions are pure.
class DissipationPotential {
 public:
  explicit DissipationPotential(CharacteristicSet cstar) : cstar_(std::move(cstar)) {}

  const CharacteristicSet& cstar() const { return cstar_; }
  Eigen::Index dimension() const { return cstar_.dimension(); }

  ExtendedReal eval(const Vector& v, const Tolerances& tol = {}) const;
  /// Conjugate psi*(q): 0 inside C* (within the feasibility band), +inf outside.
  ExtendedReal conjugate(const Vector& q, const Tolerances& tol = {}) const;
  double distance_to_cstar(const Vector& q) const;
  Vector project_cstar(const Vector& q) const;
  bool feasible(const Vector& q, const Tolerances& tol = {}) const;
  bool in_domain(const Vector& v, const Tolerances& tol = {}) const;

  /// prox_{step * psi}(z) = z - step * P_{C*}(z / step).
  Vector prox(const Vector& z, double step) const;

 private:
  CharacteristicSet cstar_;
};

ExtendedReal eval_psi(const DissipationPotential& pot, const Vector& v);
double dist_to_cstar(const DissipationPotential& pot, const Vector& q);
Vector project_cstar(const DissipationPotential& pot, const Vector& q);

struct ConjugacyReport {
  int samples = 0;
  int fenchel_checked = 0;      ///< pairs with both values finite
  int fenchel_violations = 0;   ///< psi(v) + psi*(q) < <q, v> - tol
  int equality_checked = 0;
  int equality_violations = 0;  ///< psi(v) != <q*, v> for the maximizer q*
  int support_violations = 0;   ///< a sampled q in C* beats psi(v)
  double worst_gap = 0.0;

  bool passed() const {
    return fenchel_violations == 0 && equality_violations == 0 && support_violations == 0;
  }
};

/// Randomized check of Fenchel's inequality and of the support-function
/// identity.  Deterministic for a given seed.
ConjugacyReport verify_conjugacy(const DissipationPotential& pot, int sample_count,
                                 std::uint64_t seed);

}  // namespace ratecert
