#pragma once

// The Tikhonov control ε(t): power law c(1+t)^{-p}, constant, or zero, with analytic
// integrals and checkers for the hypotheses of the selection theorem.

#include "rnflow/convex_function.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rnflow {

class Schedule {
 public:
  enum class Family { PowerLaw, Constant, Zero };

  static Schedule power_law(double c, double p) {
    if (!(c > 0) || !std::isfinite(c)) throw std::invalid_argument("schedule: power-law c must be > 0");
    if (!(p >= 0) || !std::isfinite(p)) throw std::invalid_argument("schedule: power-law p must be >= 0");
    return {Family::PowerLaw, c, p};
  }
  static Schedule constant(double c) {
    if (!(c >= 0) || !std::isfinite(c)) throw std::invalid_argument("schedule: constant c must be >= 0");
    return {Family::Constant, c, 0.0};
  }
  static Schedule zero() { return {Family::Zero, 0.0, 0.0}; }

  Family family() const { return family_; }
  double c() const { return c_; }
  double p() const { return p_; }

  /// ε(t).
  double eval(double t) const {
    check_time(t);
    switch (family_) {
      case Family::PowerLaw:
        return c_ * std::pow(1.0 + t, -p_);
      case Family::Constant:
        return c_;
      case Family::Zero:
        return 0.0;
    }
    return 0.0;
  }

  /// ε̇(t).
  double deriv(double t) const {
    check_time(t);
    if (family_ != Family::PowerLaw || p_ == 0.0) return 0.0;
    return -c_ * p_ * std::pow(1.0 + t, -p_ - 1.0);
  }

  /// ∫₀ᵀ ε(t) dt; T may be +∞.
  double integral(double T) const {
    if (!(T >= 0)) throw std::domain_error("schedule: integral horizon must be >= 0");
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (family_) {
      case Family::Zero:
        return 0.0;
      case Family::Constant:
        return c_ == 0.0 ? 0.0 : c_ * T;
      case Family::PowerLaw:
        if (p_ == 1.0) return c_ * std::log1p(T);
        if (std::isinf(T)) return p_ > 1.0 ? c_ / (p_ - 1.0) : inf;
        return c_ * (std::pow(1.0 + T, 1.0 - p_) - 1.0) / (1.0 - p_);
    }
    return 0.0;
  }

  /// sup_t |ε̇(t)|.
  double lipschitz_constant() const { return family_ == Family::PowerLaw ? c_ * p_ : 0.0; }

  bool tends_to_zero() const {
    return family_ == Family::Zero || (family_ == Family::PowerLaw && p_ > 0) ||
           (family_ == Family::Constant && c_ == 0.0);
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  Schedule(Family f, double c, double p) : family_(f), c_(c), p_(p) {}

  static void check_time(double t) {
    if (!(t >= 0)) throw std::domain_error("schedule: t must be >= 0");
  }

  Family family_;
  double c_;
  double p_;
};

struct ScheduleClass {
  bool slow;   // ∫₀^∞ ε = ∞
  bool in_l2;  // ∫₀^∞ ε² < ∞
};

inline ScheduleClass classify(const Schedule& s) {
  switch (s.family()) {
    case Schedule::Family::Zero:
      return {false, true};
    case Schedule::Family::Constant:
      return s.c() > 0 ? ScheduleClass{true, false} : ScheduleClass{false, true};
    case Schedule::Family::PowerLaw:
      return {s.p() <= 1.0, s.p() > 0.5};
  }
  return {false, false};
}

/// Smallest k ≥ 0 with −kε² ≤ ε̇ on [0, ∞), if finite.
inline std::optional<double> h2_constant(const Schedule& s) {
  if (s.family() != Schedule::Family::PowerLaw) return 0.0;
  if (s.p() > 1.0) return std::nullopt;
  return s.p() / s.c();
}

/// Everything the moderate-growth hypothesis asks of ε: nonincreasing, C¹, Lipschitz,
/// vanishing at infinity, slow, and a finite k.
struct H2Report {
  bool nonincreasing = true;
  bool c1 = true;
  double lipschitz = 0.0;
  bool tends_to_zero = false;
  bool slow = false;
  std::optional<double> k;
  bool holds() const { return nonincreasing && c1 && tends_to_zero && slow && k.has_value(); }
};

inline H2Report h2_check(const Schedule& s) {
  H2Report r;
  r.lipschitz = s.lipschitz_constant();
  r.tends_to_zero = s.tends_to_zero();
  r.slow = classify(s).slow;
  r.k = h2_constant(s);
  return r;
}

/// Test grid for the quadratic-growth estimate.
struct GrowthGrid {
  double radius = 5.0;
  int points_per_axis = 41;
  /// Points closer than this to the argmin sample are skipped, so that the sampled
  /// distance (an overestimate) stays within a few percent of the true distance.
  double min_dist = 0.25;
};

struct H1ModelReport {
  std::optional<double> r;  // estimate of inf 2Φ(x)/dist²(x, C)
  bool in_l2 = false;
  bool holds = false;
  std::string diagnostic;
};

/// Quadratic-growth sufficient condition Φ ≥ (r/2)dist²(·, C) together with ε ∈ L².
/// `argmin_points` is a sample of C = argmin Φ (assumed Φ = 0 there); dist(x, C) is
/// the distance to the nearest sample point. Dimension ≤ 3.
inline H1ModelReport h1_model_check(const ConvexFunction& f, const Schedule& s,
                                    const std::vector<Vector>& argmin_points, const GrowthGrid& grid = {}) {
  H1ModelReport rep;
  rep.in_l2 = classify(s).in_l2;
  const auto n = f.dim();
  if (n > 3) throw std::invalid_argument("h1_model_check: dimension > 3");
  if (argmin_points.empty()) throw std::invalid_argument("h1_model_check: empty argmin sample");
  if (grid.points_per_axis < 2) throw std::invalid_argument("h1_model_check: grid needs >= 2 points per axis");

  const double step = 2.0 * grid.radius / (grid.points_per_axis - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector x(n);
  double best = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = -grid.radius + step * idx[static_cast<std::size_t>(i)];
    double d2 = std::numeric_limits<double>::infinity();
    for (const auto& c : argmin_points) d2 = std::min(d2, (x - c).squaredNorm());
    if (d2 >= grid.min_dist * grid.min_dist) {
      const ExtendedReal fx = evaluate(f, x);
      if (fx.is_finite()) {
        best = std::min(best, 2.0 * fx.value() / d2);
        ++used;
      }
    }
    Eigen::Index d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == grid.points_per_axis) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }

  if (used == 0) {
    rep.diagnostic = "no finite grid point outside argmin; enlarge the grid";
  } else if (best > 0) {
    rep.r = best;
  } else {
    rep.diagnostic = "grid estimate of r is not positive; grid too coarse or growth is not quadratic";
  }
  rep.holds = rep.r.has_value() && rep.in_l2;
  if (rep.r && !rep.in_l2) rep.diagnostic = "epsilon is not square integrable";
  return rep;
}

}  // namespace rnflow
