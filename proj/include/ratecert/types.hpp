#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ratecert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a caller breaks a documented precondition (dimension
/// mismatch, state outside the domain cone, theta out of range, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by iterative solvers that exhaust their iteration budget.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Value in [-inf, +inf) extended by a distinguished +inf.  Arithmetic on
/// the finite part never sees an IEEE infinity, so nothing downstream can
/// turn into NaN.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(implicit)

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Finite value; throws on +inf.
  double value() const {
    if (infinite_) throw std::logic_error("ExtendedReal::value() on +inf");
    return value_;
  }
  /// Finite value or std::numeric_limits<double>::infinity(); for display
  /// and comparisons only.
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedReal(a.value_ + b.value_);
  }
  ExtendedReal& operator+=(ExtendedReal o) { return *this = *this + o; }
  /// Scaling by a nonnegative factor; 0 * inf is taken as inf.
  friend ExtendedReal operator*(double s, ExtendedReal a) {
    if (a.infinite_) return infinity();
    return ExtendedReal(s * a.value_);
  }

  friend bool operator<(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator<=(ExtendedReal a, ExtendedReal b) { return !(b < a); }
  friend bool operator>(ExtendedReal a, ExtendedReal b) { return b < a; }
  friend bool operator>=(ExtendedReal a, ExtendedReal b) { return !(a < b); }
  friend bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Numerical tolerances shared by the solver, the functionals and the
/// certificates.  All *_rel values are scaled by (1 + |argument|).
struct Tolerances {
  double feas_rel = 1e-9;    ///< band for q in C*
  double kkt_rel = 1e-10;    ///< per-step optimality residual
  double func = 1e-9;        ///< functional values treated as zero
  double domain_rel = 1e-12; ///< band for v in the domain cone C

  double feas(double norm) const { return feas_rel * (1.0 + norm); }
  double kkt(double norm) const { return kkt_rel * (1.0 + norm); }
  double domain(double norm) const { return domain_rel * (1.0 + norm); }
};

inline void require(bool cond, const std::string& message) {
  if (!cond) throw ContractViolation(message);
}

inline void require_dim(Eigen::Index got, Eigen::Index expected, const char* what) {
  if (got != expected) {
    throw ContractViolation(std::string(what) + ": dimension mismatch (got " +
                            std::to_string(got) + ", expected " +
                            std::to_string(expected) + ")");
  }
}

}  // namespace ratecert
