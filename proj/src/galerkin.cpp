#include "ratecert/galerkin.hpp"

#include <algorithm>
#include <random>

namespace ratecert {

Subspace::Subspace(Matrix basis, double orthonormality_tol) : basis_(std::move(basis)) {
  const Eigen::Index n = basis_.rows();
  const Eigen::Index k = basis_.cols();
  require(k >= 1 && n >= 1, "subspace basis must be nonempty");
  require(k <= n, "subspace dimension exceeds the parent dimension");
  require(basis_.allFinite(), "subspace basis is not finite");
  const double defect = (basis_.transpose() * basis_ - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  require(defect <= orthonormality_tol, "subspace basis columns must be orthonormal");

  std::vector<Eigen::Index> axes;
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index row = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = basis_(i, j);
      if (v == 1.0 && row < 0) {
        row = i;
      } else if (v != 0.0) {
        return;
      }
    }
    if (row < 0 || (!axes.empty() && row <= axes.back())) return;
    axes.push_back(row);
  }
  axes_ = std::move(axes);
}

Subspace Subspace::full(Eigen::Index n) { return Subspace(Matrix::Identity(n, n)); }

Subspace Subspace::coordinates(Eigen::Index n, std::vector<Eigen::Index> axes) {
  std::sort(axes.begin(), axes.end());
  require(std::adjacent_find(axes.begin(), axes.end()) == axes.end(), "subspace axes must be distinct");
  Matrix b = Matrix::Zero(n, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t j = 0; j < axes.size(); ++j) {
    require(axes[j] >= 0 && axes[j] < n, "subspace axis out of range");
    b(axes[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return Subspace(std::move(b));
}

std::vector<Subspace> Subspace::random_chain(Eigen::Index n, std::uint64_t seed) {
  require(n >= 1, "chain dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = gauss(rng);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(n, n);
  std::vector<Subspace> chain;
  for (Eigen::Index k = 1; k <= n; ++k) chain.emplace_back(q.leftCols(k), 1e-10);
  return chain;
}

std::vector<Subspace> Subspace::coordinate_chain(Eigen::Index n) {
  std::vector<Subspace> chain;
  std::vector<Eigen::Index> axes;
  for (Eigen::Index k = 0; k < n; ++k) {
    axes.push_back(k);
    chain.push_back(coordinates(n, axes));
  }
  return chain;
}

bool Subspace::contains(const Subspace& other, double tol) const {
  if (other.parent_dimension() != parent_dimension() || other.dimension() > dimension()) return false;
  const Matrix residual = other.basis() - basis_ * (basis_.transpose() * other.basis());
  return residual.cwiseAbs().maxCoeff() <= tol;
}

namespace {

bool contains_axis(const std::vector<Eigen::Index>& axes, Eigen::Index i) {
  return std::binary_search(axes.begin(), axes.end(), i);
}

CharacteristicSet zero_set(Eigen::Index m) {
  Matrix normals(2 * m, m);
  normals << Matrix::Identity(m, m), -Matrix::Identity(m, m);
  return CharacteristicSet::halfspaces(std::move(normals), Vector::Zero(2 * m));
}

// Image of C* under the coordinate projection onto the selected axes of the
// block [offset, offset + dimension).  Returns nullopt when no axis of the
// block is selected.
std::optional<CharacteristicSet> project_set(const CharacteristicSet& set, Eigen::Index offset,
                                             const std::vector<Eigen::Index>& axes) {
  std::vector<Eigen::Index> local;
  for (Eigen::Index i = 0; i < set.dimension(); ++i) {
    if (contains_axis(axes, offset + i)) local.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(local.size());
  if (m == 0) return std::nullopt;
  if (m == set.dimension()) return set;

  if (const auto* b = set.as_norm_ball()) {
    Eigen::Index before = 0, inside = 0;
    for (Eigen::Index i : local) {
      if (i < b->block_offset) ++before;
      else if (i < b->block_offset + b->block_size) ++inside;
    }
    if (inside == 0) return zero_set(m);
    return CharacteristicSet::norm_ball(b->radius, m, before, inside);
  }
  if (const auto* c = set.as_cone_capped()) {
    require(local.back() == c->p_dim,
            "restriction drops the isotropic variable; use a custom dissipation");
    require(m >= 2, "restriction keeps no plastic-strain axis; use a custom dissipation");
    return CharacteristicSet::cone_capped(c->sigma, m - 1);
  }
  if (set.as_halfspaces()) {
    throw ContractViolation("restriction splits a polyhedral factor; use a custom dissipation");
  }
  std::vector<CharacteristicSet> factors;
  Eigen::Index off = offset;
  for (const auto& f : set.as_product()->factors) {
    if (auto r = project_set(f, off, axes)) factors.push_back(std::move(*r));
    off += f.dimension();
  }
  if (factors.size() == 1) return factors.front();
  return CharacteristicSet::product(std::move(factors));
}

CharacteristicSet restrict_set(const CharacteristicSet& set, const Subspace& space) {
  const auto* b = set.as_norm_ball();
  if (b && b->block_offset == 0 && b->block_size == set.dimension()) {
    // |B v| = |v| for orthonormal B.
    return CharacteristicSet::norm_ball(b->radius, space.dimension());
  }
  require(space.axes().has_value(),
          "restriction of this dissipation needs a coordinate subspace; use a custom dissipation");
  return *project_set(set, 0, *space.axes());
}

}  // namespace

Restriction restrict(const Problem& problem, const Subspace& space, PsiMode mode,
                     const std::optional<DissipationPotential>& custom_psi) {
  require_dim(space.parent_dimension(), problem.dimension(), "subspace parent");
  const Matrix& b = space.basis();
  const Eigen::Index k = space.dimension();

  DissipationPotential psi_h = [&] {
    if (mode == PsiMode::Custom) {
      require(custom_psi.has_value(), "custom mode needs a dissipation potential");
      require_dim(custom_psi->dimension(), k, "custom dissipation");
      return *custom_psi;
    }
    return DissipationPotential(restrict_set(problem.psi.cstar(), space));
  }();

  const Matrix a_h = b.transpose() * problem.energy.matrix() * b;
  std::vector<LoadKnot> knots;
  for (const auto& kn : problem.load.knots()) knots.push_back({kn.time, b.transpose() * kn.value});
  LoadPath load_h(std::move(knots), problem.horizon());
  const Vector y0_h = b.transpose() * problem.y0;

  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (a_h + a_h.transpose()), Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  const double scale = std::max(1.0, problem.energy.lambda_max());
  bool reestimated = false;
  double alpha_h;
  CoercivityScope scope;
  if (lmin > 1e-12 * scale) {
    alpha_h = lmin;
    scope = CoercivityScope::Global;
  } else {
    // Coercivity survives at best on the restricted domain cone.
    reestimated = true;
    const QuadraticEnergy probe(a_h, 1.0, CoercivityScope::OnC);
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss;
    ConeSampler sampler = [&]() {
      for (int tries = 0; tries < 1000; ++tries) {
        Vector v(k);
        for (Eigen::Index i = 0; i < k; ++i) v(i) = gauss(rng);
        if (psi_h.in_domain(v)) return v;
      }
      throw ContractViolation("restricted domain cone could not be sampled");
    };
    alpha_h = estimate_alpha(probe, sampler, 2000);
    require(alpha_h > 1e-12 * scale, "restricted problem is not coercive on its domain cone");
    scope = CoercivityScope::OnC;
  }
  Problem restricted{QuadraticEnergy(a_h, alpha_h, scope), std::move(psi_h), std::move(load_h), y0_h};
  validate_problem(restricted);
  return {std::move(restricted), space, reestimated};
}

Trajectory lift(const Trajectory& traj, const Subspace& space) {
  Trajectory out = traj;
  for (auto& y : out.states) y = space.lift(y);
  return out;
}

NestedReport nested_convergence(const Problem& problem, const std::vector<Subspace>& chain,
                                const Partition& partition, double theta, const SolverOptions& options) {
  require(!chain.empty(), "nested chain is empty");
  for (std::size_t k = 1; k < chain.size(); ++k) {
    require(chain[k].dimension() > chain[k - 1].dimension() && chain[k].contains(chain[k - 1]),
            "subspace chain must be strictly nested");
  }
  require(chain.back().dimension() == problem.dimension(), "last subspace of the chain must be the whole space");
  const Trajectory reference = solve_theta(problem, partition, theta, options);
  NestedReport rep;
  for (const auto& s : chain) {
    const Restriction r = restrict(problem, s);
    const Trajectory traj = solve_theta(r.problem, partition, theta, options);
    double dist = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      dist = std::max(dist, (s.lift(traj.states[i]) - reference.states[i]).norm());
    }
    const FunctionalReport f = eval_Fn_theta(r.problem, traj.states, partition, theta, options.tol);
    rep.levels.push_back({s.dimension(), dist, f.total, energy_balance_residual(r.problem, traj)});
  }
  return rep;
}

std::vector<DiagonalEntry> space_time_diagonal(const Problem& problem, const std::vector<Subspace>& chain,
                                               const std::vector<int>& steps, double theta,
                                               const Oracle& oracle, const SolverOptions& options) {
  require(chain.size() == steps.size() && !chain.empty(), "diagonal needs one step count per subspace");
  std::vector<DiagonalEntry> out;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const Restriction r = restrict(problem, chain[k]);
    const Trajectory traj = solve_theta(r.problem, Partition::uniform(problem.horizon(), steps[k]), theta, options);
    out.push_back({chain[k].dimension(), steps[k], uniform_error(lift(traj, chain[k]), oracle)});
  }
  return out;
}

}  // namespace ratecert
