#include "ratecert/dissipation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ratecert {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Polyhedral support function: max <v, q> subject to N q <= b, q free.
// Dense primal simplex with Bland's rule, starting from the slack basis
// (feasible because b >= 0).

struct LpResult {
  bool bounded = true;
  double value = 0.0;
  Vector argmax;
};

LpResult polyhedral_support(const Matrix& normals, const Vector& offsets, const Vector& v) {
  const Eigen::Index m = normals.rows();
  const Eigen::Index n = normals.cols();
  const Eigen::Index cols = 2 * n + m;
  Matrix tab = Matrix::Zero(m + 1, cols + 1);
  tab.block(0, 0, m, n) = normals;
  tab.block(0, n, m, n) = -normals;
  tab.block(0, 2 * n, m, m).setIdentity();
  tab.block(0, cols, m, 1) = offsets;
  tab.block(m, 0, 1, n) = -v.transpose();
  tab.block(m, n, 1, n) = v.transpose();

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::iota(basis.begin(), basis.end(), 2 * n);

  const double scale = 1.0 + v.lpNorm<Eigen::Infinity>() + normals.lpNorm<Eigen::Infinity>();
  const double eps = 1e-12 * scale;
  const int max_pivots = 50 * static_cast<int>(cols + m) + 1000;

  for (int it = 0; it < max_pivots; ++it) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (tab(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) {
      LpResult res;
      res.value = tab(m, cols);
      Vector x = Vector::Zero(cols);
      for (Eigen::Index i = 0; i < m; ++i) x(basis[static_cast<std::size_t>(i)]) = tab(i, cols);
      res.argmax = x.head(n) - x.segment(n, n);
      return res;
    }
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = tab(i, enter);
      if (a <= eps) continue;
      const double ratio = tab(i, cols) / a;
      if (leave < 0 || ratio < best - eps ||
          (std::abs(ratio - best) <= eps &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) {
      LpResult res;
      res.bounded = false;
      return res;
    }
    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && tab(i, enter) != 0.0) {
        tab.row(i) -= tab(i, enter) * tab.row(leave);
      }
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  throw NonConvergence("polyhedral support: simplex pivot limit reached", 0.0);
}

// Euclidean projection onto {N q <= b}: Hildreth's dual coordinate ascent,
// then an exact equality-constrained solve on the detected active set.
Vector polyhedral_project(const Matrix& normals, const Vector& offsets, const Vector& q) {
  const Eigen::Index m = normals.rows();
  const double scale = 1.0 + q.norm() + offsets.lpNorm<Eigen::Infinity>();
  if (((normals * q - offsets).array() <= 0.0).all()) return q;

  Vector row_sq = normals.rowwise().squaredNorm();
  Vector lambda = Vector::Zero(m);
  Vector x = q;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (row_sq(k) == 0.0) continue;
      const double c = (normals.row(k).dot(x) - offsets(k)) / row_sq(k);
      const double step = std::max(c, -lambda(k));
      if (step != 0.0) {
        lambda(k) += step;
        x -= step * normals.row(k).transpose();
        change = std::max(change, std::abs(step) * std::sqrt(row_sq(k)));
      }
    }
    if (change <= 1e-15 * scale) break;
  }

  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (lambda(k) > 0.0) active.push_back(k);
  }
  if (!active.empty()) {
    Matrix na(static_cast<Eigen::Index>(active.size()), normals.cols());
    Vector ba(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      na.row(static_cast<Eigen::Index>(a)) = normals.row(active[a]);
      ba(static_cast<Eigen::Index>(a)) = offsets(active[a]);
    }
    const Matrix gram = na * na.transpose();
    const Vector mu = gram.completeOrthogonalDecomposition().solve(na * q - ba);
    const Vector polished = q - na.transpose() * mu;
    const bool feasible = ((normals * polished - offsets).array() <= 1e-13 * scale).all();
    const bool dual_ok = (mu.array() >= -1e-12 * scale).all();
    if (feasible && dual_ok) return polished;
  }
  return x;
}

// Euclidean projection onto {(q, g) : |q| + g <= sigma}.  With w = sigma - g
// the set is the second-order cone {|q| <= w}.
Vector cone_capped_project(double sigma, const Vector& x) {
  const Eigen::Index p = x.size() - 1;
  const Vector q = x.head(p);
  const double w = sigma - x(p);
  const double nq = q.norm();
  if (nq <= w) return x;
  Vector out(x.size());
  if (nq <= -w) {
    out.head(p).setZero();
    out(p) = sigma;
    return out;
  }
  const double coef = 0.5 * (nq + w);
  out.head(p) = (coef / nq) * q;
  out(p) = sigma - coef;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

CharacteristicSet CharacteristicSet::norm_ball(double radius, Eigen::Index dimension) {
  return norm_ball(radius, dimension, 0, dimension);
}

CharacteristicSet CharacteristicSet::norm_ball(double radius, Eigen::Index dimension,
                                               Eigen::Index block_offset,
                                               Eigen::Index block_size) {
  require(radius > 0.0 && std::isfinite(radius), "norm ball radius must be positive");
  require(dimension >= 1, "norm ball dimension must be positive");
  require(block_offset >= 0 && block_size >= 1 && block_offset + block_size <= dimension,
          "norm ball block must lie inside the dimension");
  return {NormBall{radius, dimension, block_offset, block_size}, dimension};
}

CharacteristicSet CharacteristicSet::cone_capped(double sigma, Eigen::Index p_dim) {
  require(sigma > 0.0 && std::isfinite(sigma), "cone-capped sigma must be positive");
  require(p_dim >= 1, "cone-capped p_dim must be positive");
  return {ConeCapped{sigma, p_dim}, p_dim + 1};
}

CharacteristicSet CharacteristicSet::halfspaces(Matrix normals, Vector offsets) {
  require(normals.rows() >= 1 && normals.cols() >= 1, "halfspaces: empty constraint list");
  require_dim(offsets.size(), normals.rows(), "halfspaces offsets");
  require((offsets.array() >= 0.0).all(), "halfspaces: offsets must be >= 0 so that 0 lies in C*");
  const Eigen::Index dim = normals.cols();
  return {Halfspaces{std::move(normals), std::move(offsets)}, dim};
}

CharacteristicSet CharacteristicSet::product(std::vector<CharacteristicSet> factors) {
  require(!factors.empty(), "product of zero sets");
  Eigen::Index dim = 0;
  for (const auto& f : factors) dim += f.dimension();
  return {Product{std::move(factors)}, dim};
}

CharacteristicSet::Kind CharacteristicSet::kind() const {
  return std::visit(overloaded{[](const NormBall&) { return Kind::NormBall; },
                               [](const ConeCapped&) { return Kind::ConeCapped; },
                               [](const Halfspaces&) { return Kind::Halfspaces; },
                               [](const Product&) { return Kind::Product; }},
                    data_);
}

ExtendedReal CharacteristicSet::support(const Vector& v, const Tolerances& tol) const {
  require_dim(v.size(), dimension_, "support");
  return std::visit(
      overloaded{
          [&](const NormBall& b) -> ExtendedReal {
            return b.radius * v.segment(b.block_offset, b.block_size).norm();
          },
          [&](const ConeCapped& c) -> ExtendedReal {
            const double np = v.head(c.p_dim).norm();
            const double xi = v(c.p_dim);
            if (np > xi + tol.domain(v.norm())) return ExtendedReal::infinity();
            return c.sigma * std::max(xi, 0.0);
          },
          [&](const Halfspaces& h) -> ExtendedReal {
            if (v.isZero(0.0)) return 0.0;
            const LpResult lp = polyhedral_support(h.normals, h.offsets, v);
            if (!lp.bounded) return ExtendedReal::infinity();
            return std::max(lp.value, 0.0);
          },
          [&](const Product& p) -> ExtendedReal {
            ExtendedReal total = 0.0;
            Eigen::Index off = 0;
            for (const auto& f : p.factors) {
              total += f.support(v.segment(off, f.dimension()), tol);
              off += f.dimension();
            }
            return total;
          }},
      data_);
}

Vector CharacteristicSet::maximizer(const Vector& v, const Tolerances& tol) const {
  require_dim(v.size(), dimension_, "maximizer");
  return std::visit(
      overloaded{
          [&](const NormBall& b) -> Vector {
            Vector q = Vector::Zero(dimension_);
            const Vector vb = v.segment(b.block_offset, b.block_size);
            const double n = vb.norm();
            if (n > 0.0) q.segment(b.block_offset, b.block_size) = (b.radius / n) * vb;
            return q;
          },
          [&](const ConeCapped& c) -> Vector {
            require(in_domain(v, tol), "maximizer: argument outside the domain cone");
            Vector q = Vector::Zero(dimension_);
            q(c.p_dim) = c.sigma;
            return q;
          },
          [&](const Halfspaces& h) -> Vector {
            if (v.isZero(0.0)) return Vector::Zero(dimension_);
            const LpResult lp = polyhedral_support(h.normals, h.offsets, v);
            require(lp.bounded, "maximizer: support function is +inf");
            return lp.argmax;
          },
          [&](const Product& p) -> Vector {
            Vector q(dimension_);
            Eigen::Index off = 0;
            for (const auto& f : p.factors) {
              q.segment(off, f.dimension()) = f.maximizer(v.segment(off, f.dimension()), tol);
              off += f.dimension();
            }
            return q;
          }},
      data_);
}

Vector CharacteristicSet::project(const Vector& q) const {
  require_dim(q.size(), dimension_, "project");
  return std::visit(
      overloaded{
          [&](const NormBall& b) -> Vector {
            Vector out = Vector::Zero(dimension_);
            const Vector qb = q.segment(b.block_offset, b.block_size);
            const double n = qb.norm();
            out.segment(b.block_offset, b.block_size) = n <= b.radius ? qb : Vector((b.radius / n) * qb);
            return out;
          },
          [&](const ConeCapped& c) -> Vector { return cone_capped_project(c.sigma, q); },
          [&](const Halfspaces& h) -> Vector {
            return polyhedral_project(h.normals, h.offsets, q);
          },
          [&](const Product& p) -> Vector {
            Vector out(dimension_);
            Eigen::Index off = 0;
            for (const auto& f : p.factors) {
              out.segment(off, f.dimension()) = f.project(q.segment(off, f.dimension()));
              off += f.dimension();
            }
            return out;
          }},
      data_);
}

double CharacteristicSet::distance(const Vector& q) const {
  require_dim(q.size(), dimension_, "distance");
  if (const auto* b = as_norm_ball()) {
    const double excess = std::max(0.0, q.segment(b->block_offset, b->block_size).norm() - b->radius);
    const double off_block = q.squaredNorm() - q.segment(b->block_offset, b->block_size).squaredNorm();
    return std::sqrt(excess * excess + std::max(0.0, off_block));
  }
  return (q - project(q)).norm();
}

bool CharacteristicSet::in_domain(const Vector& v, const Tolerances& tol) const {
  require_dim(v.size(), dimension_, "in_domain");
  return std::visit(
      overloaded{
          [&](const NormBall&) { return true; },
          [&](const ConeCapped& c) {
            return v.head(c.p_dim).norm() <= v(c.p_dim) + tol.domain(v.norm());
          },
          [&](const Halfspaces&) { return support(v, tol).is_finite(); },
          [&](const Product& p) {
            Eigen::Index off = 0;
            for (const auto& f : p.factors) {
              if (!f.in_domain(v.segment(off, f.dimension()), tol)) return false;
              off += f.dimension();
            }
            return true;
          }},
      data_);
}

Vector CharacteristicSet::sample(std::mt19937_64& rng, double scale) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (const auto* p = as_product()) {
    Vector out(dimension_);
    Eigen::Index off = 0;
    for (const auto& f : p->factors) {
      out.segment(off, f.dimension()) = f.sample(rng, scale);
      off += f.dimension();
    }
    return out;
  }
  Vector g(dimension_);
  for (Eigen::Index i = 0; i < dimension_; ++i) g(i) = scale * normal(rng);
  const double pick = unit(rng);
  if (pick < 0.1) {
    // Extreme point in a random admissible direction.
    if (const auto* c = as_cone_capped()) {
      g(c->p_dim) = g.head(c->p_dim).norm() + std::abs(g(c->p_dim));
    }
    if (support(g).is_finite()) return maximizer(g);
  }
  Vector q = project(g);
  if (pick < 0.55) {
    // Pull a fraction of the samples strictly inside.
    q *= unit(rng);
  }
  return q;
}

// ---------------------------------------------------------------------------

ExtendedReal DissipationPotential::eval(const Vector& v, const Tolerances& tol) const {
  return cstar_.support(v, tol);
}

ExtendedReal DissipationPotential::conjugate(const Vector& q, const Tolerances& tol) const {
  return feasible(q, tol) ? ExtendedReal(0.0) : ExtendedReal::infinity();
}

double DissipationPotential::distance_to_cstar(const Vector& q) const { return cstar_.distance(q); }

Vector DissipationPotential::project_cstar(const Vector& q) const { return cstar_.project(q); }

bool DissipationPotential::feasible(const Vector& q, const Tolerances& tol) const {
  return cstar_.distance(q) <= tol.feas(q.norm());
}

bool DissipationPotential::in_domain(const Vector& v, const Tolerances& tol) const {
  return cstar_.in_domain(v, tol);
}

Vector DissipationPotential::prox(const Vector& z, double step) const {
  require(step > 0.0, "prox step must be positive");
  return z - step * cstar_.project(z / step);
}

ExtendedReal eval_psi(const DissipationPotential& pot, const Vector& v) { return pot.eval(v); }

double dist_to_cstar(const DissipationPotential& pot, const Vector& q) {
  return pot.distance_to_cstar(q);
}

Vector project_cstar(const DissipationPotential& pot, const Vector& q) {
  return pot.project_cstar(q);
}

ConjugacyReport verify_conjugacy(const DissipationPotential& pot, int sample_count,
                                 std::uint64_t seed) {
  require(sample_count > 0, "verify_conjugacy: sample_count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = pot.dimension();
  const Tolerances tol;
  ConjugacyReport rep;
  rep.samples = sample_count;

  for (int s = 0; s < sample_count; ++s) {
    Vector v(n), q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v(i) = normal(rng);
      q(i) = 1.5 * normal(rng);
    }
    // Half of the directions are pushed into the domain cone so that the
    // finite branch of psi is exercised for cone-restricted potentials.
    if (s % 2 == 0 && !pot.in_domain(v)) {
      if (const auto* c = pot.cstar().as_cone_capped()) v(c->p_dim) = v.head(c->p_dim).norm() + std::abs(v(c->p_dim));
    }
    // Every fourth dual point is moved into C*.
    if (s % 4 == 0) q = pot.cstar().sample(rng, 1.5);

    const ExtendedReal psi_v = pot.eval(v);
    const ExtendedReal conj_q = pot.conjugate(q);
    const double pairing = q.dot(v);
    const double band = 1e-9 * (1.0 + v.norm()) * (1.0 + q.norm());

    if (psi_v.is_finite() && conj_q.is_finite()) {
      ++rep.fenchel_checked;
      const double gap = psi_v.value() + conj_q.value() - pairing;
      if (gap < -band) {
        ++rep.fenchel_violations;
        rep.worst_gap = std::min(rep.worst_gap, gap);
      }
      // A sampled q in C* must not exceed the support value.
      const Vector inner = pot.cstar().sample(rng, 1.5);
      if (inner.dot(v) > psi_v.value() + band) ++rep.support_violations;
    }
    if (psi_v.is_finite()) {
      ++rep.equality_checked;
      const Vector qstar = pot.cstar().maximizer(v);
      const double gap = psi_v.value() - qstar.dot(v);
      if (std::abs(gap) > band || !pot.feasible(qstar)) ++rep.equality_violations;
    }
  }
  return rep;
}

}  // namespace ratecert
