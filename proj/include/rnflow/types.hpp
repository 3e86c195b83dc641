#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rnflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dimension of an argument does not match the function it is passed to.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A constructor argument violates a documented invariant (lo > hi, alpha <= 0, ...).
class InvalidFunction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The combinator calculus has no exact proximal formula for this node.
class NoProxRule : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// No closed-form conjugate is registered for this node.
class NoConjugateRule : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A requested closed form (infimum, minimal-norm point, ...) is not available.
class NoClosedForm : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnboundedBelow : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Integration produced a non-finite state.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value in R ∪ {+∞}. Only +∞ is representable; proper convex functions never reach −∞.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Finite value; throws for +∞.
  double value() const {
    if (infinite_) throw std::domain_error("ExtendedReal: value() of +inf");
    return value_;
  }

  /// +∞ maps to std::numeric_limits<double>::infinity().
  constexpr double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return {a.value_ + b.value_};
  }
  friend ExtendedReal operator-(ExtendedReal a, double b) { return a + ExtendedReal(-b); }

  /// Multiplication by a nonnegative scalar; 0·(+∞) is taken as +∞ (indicator semantics).
  friend ExtendedReal operator*(double s, ExtendedReal a) {
    if (a.infinite_) return infinity();
    return {s * a.value_};
  }

  friend bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace rnflow
