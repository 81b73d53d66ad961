#include "ratecert/load_path.hpp"

#include <algorithm>
#include <cmath>

namespace ratecert {

LoadPath::LoadPath(std::vector<LoadKnot> knots, double horizon)
    : knots_(std::move(knots)), horizon_(horizon) {
  require(horizon_ > 0.0 && std::isfinite(horizon_), "load horizon T must be positive");
  require(!knots_.empty(), "load path needs at least one knot");
  const Eigen::Index dim = knots_.front().value.size();
  require(dim >= 1, "load vectors must be nonempty");
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    require_dim(knots_[k].value.size(), dim, "load knot");
    require(knots_[k].value.allFinite() && std::isfinite(knots_[k].time), "load knot is not finite");
    if (k > 0) require(knots_[k].time > knots_[k - 1].time, "load knot times must be strictly increasing");
  }
  if (knots_.size() == 1) {
    // A single knot is a constant load.
    knots_.push_back({std::max(horizon_, knots_.front().time + 1.0), knots_.front().value});
  }
  require(knots_.front().time <= 0.0 && knots_.back().time >= horizon_,
          "load knots must cover [0, T]");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    const auto& a = knots_[k - 1];
    const auto& b = knots_[k];
    if (b.time <= 0.0 || a.time >= horizon_) continue;
    lipschitz_ = std::max(lipschitz_, (b.value - a.value).norm() / (b.time - a.time));
  }
}

LoadPath LoadPath::ramp(const Vector& rate, double horizon) {
  return LoadPath({{0.0, Vector::Zero(rate.size())}, {horizon, horizon * rate}}, horizon);
}

LoadPath LoadPath::zero(Eigen::Index dimension, double horizon) {
  return LoadPath({{0.0, Vector::Zero(dimension)}, {horizon, Vector::Zero(dimension)}}, horizon);
}

Vector LoadPath::operator()(double t) const {
  if (t <= knots_.front().time) return knots_.front().value;
  if (t >= knots_.back().time) return knots_.back().value;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double x, const LoadKnot& k) { return x < k.time; });
  const LoadKnot& b = *it;
  const LoadKnot& a = *(it - 1);
  if (t == a.time) return a.value;
  const double w = (t - a.time) / (b.time - a.time);
  return (1.0 - w) * a.value + w * b.value;
}

std::vector<double> LoadPath::breakpoints_in(double a, double b) const {
  std::vector<double> out;
  for (const auto& k : knots_) {
    if (k.time > a && k.time < b) out.push_back(k.time);
  }
  return out;
}

Vector LoadPath::mean(double a, double b) const {
  require(b > a, "load mean over an empty interval");
  std::vector<double> pts{a};
  for (double t : breakpoints_in(a, b)) pts.push_back(t);
  pts.push_back(b);
  Vector acc = Vector::Zero(dimension());
  Vector prev = (*this)(pts.front());
  for (std::size_t k = 1; k < pts.size(); ++k) {
    Vector cur = (*this)(pts[k]);
    acc += 0.5 * (pts[k] - pts[k - 1]) * (prev + cur);
    prev = std::move(cur);
  }
  return acc / (b - a);
}

double LoadPath::integral_derivative_pairing(double a, double b, const Vector& ya,
                                             const Vector& yb) const {
  require(b > a, "pairing integral over an empty interval");
  std::vector<double> pts{a};
  for (double t : breakpoints_in(a, b)) pts.push_back(t);
  pts.push_back(b);
  double acc = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double w0 = (pts[k - 1] - a) / (b - a);
    const double w1 = (pts[k] - a) / (b - a);
    const Vector y0 = (1.0 - w0) * ya + w0 * yb;
    const Vector y1 = (1.0 - w1) * ya + w1 * yb;
    acc += ((*this)(pts[k]) - (*this)(pts[k - 1])).dot(0.5 * (y0 + y1));
  }
  return acc;
}

double LoadPath::sup_norm() const {
  double best = (*this)(0.0).norm();
  best = std::max(best, (*this)(horizon_).norm());
  for (const auto& k : knots_) {
    if (k.time > 0.0 && k.time < horizon_) best = std::max(best, k.value.norm());
  }
  return best;
}

LoadPath LoadPath::reparametrized(const std::vector<double>& from,
                                  const std::vector<double>& to) const {
  require(from.size() == to.size() && from.size() >= 2, "reparametrization needs matching breakpoints");
  require(from.front() == 0.0 && to.front() == 0.0, "reparametrization must fix t = 0");
  require(from.back() == horizon_, "reparametrization must cover [0, T]");
  for (std::size_t k = 1; k < from.size(); ++k) {
    require(from[k] > from[k - 1] && to[k] > to[k - 1], "reparametrization must be strictly increasing");
  }
  auto forward = [&](double t) {
    auto it = std::upper_bound(from.begin(), from.end(), t);
    if (it == from.end()) return to.back();
    const std::size_t k = static_cast<std::size_t>(it - from.begin());
    const double w = (t - from[k - 1]) / (from[k] - from[k - 1]);
    return (1.0 - w) * to[k - 1] + w * to[k];
  };
  std::vector<double> times(from.begin(), from.end());
  for (const auto& k : knots_) {
    if (k.time > 0.0 && k.time < horizon_) times.push_back(k.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<LoadKnot> out;
  out.reserve(times.size());
  for (double t : times) {
    out.push_back({t == from.back() ? to.back() : forward(t), (*this)(t)});
  }
  return LoadPath(std::move(out), to.back());
}

}  // namespace ratecert
