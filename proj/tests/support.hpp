#pragma once

// Random generators and brute-force oracles shared by the test binaries.
// The oracles here only call evaluate(); they never use prox or conjugate rules.

#include <rnflow/rnflow.hpp>

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using rnflow::ConvexFunction;
using rnflow::Matrix;
using rnflow::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vector randn(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = g(rng);
  return out;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  Matrix B(n, rank);
  for (Eigen::Index j = 0; j < rank; ++j) B.col(j) = randn(rng, n);
  return B * B.transpose();
}

/// Random box with lo ≤ hi.
inline std::pair<Vector, Vector> random_box(std::mt19937_64& rng, Eigen::Index n) {
  Vector lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = uniform(rng, -3, 3);
    const double w = uniform(rng, 0.0, 3.0);
    lo(i) = a;
    hi(i) = a + w;
  }
  return {lo, hi};
}

struct Family {
  std::string name;
  std::function<ConvexFunction(std::mt19937_64&)> make;
};

/// One family per atom and per combinator, each with a closed-form prox.
inline std::vector<Family> families() {
  std::vector<Family> out;
  out.push_back({"quadratic", [](auto& rng) {
                   const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
                   const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng() % n);
                   const Matrix A = random_psd(rng, n, r);
                   return ConvexFunction::quadratic(A, A * randn(rng, n), uniform(rng, -1, 1));
                 }});
  out.push_back({"abs", [](auto&) { return ConvexFunction::abs_value(); }});
  out.push_back({"box", [](auto& rng) {
                   auto [lo, hi] = random_box(rng, 1 + static_cast<Eigen::Index>(rng() % 3));
                   return ConvexFunction::indicator_box(lo, hi);
                 }});
  out.push_back({"halfspace", [](auto& rng) {
                   const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
                   return ConvexFunction::indicator_halfspace(randn(rng, n), uniform(rng, -2, 2));
                 }});
  out.push_back({"affine", [](auto& rng) {
                   const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 2);
                   Matrix A(1, n);
                   A.row(0) = randn(rng, n).transpose();
                   return ConvexFunction::indicator_affine(A, randn(rng, 1));
                 }});
  out.push_back({"norm1", [](auto& rng) { return ConvexFunction::norm_one(1 + static_cast<Eigen::Index>(rng() % 3)); }});
  out.push_back({"half_sq_dist_box", [](auto& rng) {
                   auto [lo, hi] = random_box(rng, 1 + static_cast<Eigen::Index>(rng() % 3));
                   return ConvexFunction::half_sq_dist_to_box(lo, hi);
                 }});
  out.push_back({"abs_sum", [](auto& rng) {
                   std::vector<double> k{uniform(rng, -3, 0), uniform(rng, 0, 3), uniform(rng, -1, 1)};
                   std::vector<double> w{uniform(rng, 0.1, 2), uniform(rng, 0.1, 2), uniform(rng, 0.1, 2)};
                   return ConvexFunction::abs_sum(k, w);
                 }});
  out.push_back({"separable_sum", [](auto& rng) {
                   auto [lo, hi] = random_box(rng, 1);
                   return ConvexFunction::separable_sum(
                       {ConvexFunction::abs_value(), ConvexFunction::indicator_box(lo, hi),
                        ConvexFunction::quadratic(Matrix::Identity(1, 1) * uniform(rng, 0.1, 2), randn(rng, 1))});
                 }});
  out.push_back({"translate", [](auto& rng) {
                   return ConvexFunction::translate(ConvexFunction::norm_one(2), randn(rng, 2));
                 }});
  out.push_back({"add_linear", [](auto& rng) {
                   return ConvexFunction::add_linear(ConvexFunction::norm_one(2), randn(rng, 2, 0.5));
                 }});
  out.push_back({"scale", [](auto& rng) {
                   auto [lo, hi] = random_box(rng, 2);
                   return ConvexFunction::scale(ConvexFunction::half_sq_dist_to_box(lo, hi), uniform(rng, 0.2, 3));
                 }});
  out.push_back({"shift_value", [](auto& rng) {
                   return ConvexFunction::shift_value(ConvexFunction::abs_value(), uniform(rng, -2, 2));
                 }});
  out.push_back({"sum_of_abs", [](auto& rng) {
                   auto t = [&](double s) { return ConvexFunction::translate(ConvexFunction::abs_value(), vec({s})); };
                   return ConvexFunction::sum({t(uniform(rng, -2, 0)), t(uniform(rng, 0, 2))});
                 }});
  return out;
}

/// Calls fn(x) on the grid center + [−half, half]^n with `points` points per axis.
template <class Fn>
void grid(const Vector& center, double half, int points, Fn&& fn) {
  const auto n = center.size();
  const double step = 2.0 * half / (points - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector x(n);
  for (;;) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = center(i) - half + step * idx[static_cast<std::size_t>(i)];
    fn(x);
    Eigen::Index d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == points) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) return;
  }
}

/// argmin of Φ(ξ) + ‖y − ξ‖²/(2μ) by repeated grid shrinking; NaN when a grid level
/// sees no finite value (sets thinner than the grid step).
inline Vector grid_prox(const ConvexFunction& f, double mu, const Vector& y, double radius = 10.0) {
  Vector center = y;
  double half = radius;
  for (int round = 0; round < 12; ++round) {
    double best = std::numeric_limits<double>::infinity();
    Vector arg = center;
    grid(center, half, 41, [&](const Vector& x) {
      const double v = rnflow::evaluate(f, x).to_double() + (y - x).squaredNorm() / (2 * mu);
      if (v < best) {
        best = v;
        arg = x;
      }
    });
    if (!std::isfinite(best)) return Vector::Constant(y.size(), std::numeric_limits<double>::quiet_NaN());
    center = arg;
    half *= 0.2;
  }
  return center;
}

/// sup over the grid [−R, R]^n of ⟨x, z⟩ − Φ(x).
inline double grid_sup(const ConvexFunction& f, const Vector& z, double R, int points) {
  double best = -std::numeric_limits<double>::infinity();
  grid(Vector::Zero(f.dim()), R, points, [&](const Vector& x) {
    const double v = x.dot(z) - rnflow::evaluate(f, x).to_double();
    best = std::max(best, v);
  });
  return best;
}

/// min over the grid of Φ.
inline double grid_min(const ConvexFunction& f, double R, int points) {
  double best = std::numeric_limits<double>::infinity();
  grid(Vector::Zero(f.dim()), R, points, [&](const Vector& x) { best = std::min(best, rnflow::evaluate(f, x).to_double()); });
  return best;
}

}  // namespace testing_support
