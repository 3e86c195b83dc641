#pragma once

// Ground truth (the minimal-norm minimizer) and convergence reports for a trajectory.

#include "rnflow/dynamics.hpp"

#include <future>
#include <optional>
#include <vector>

namespace rnflow {

enum class OracleMode { Analytic, Brute };

struct BruteOptions {
  double radius = 10.0;
  int points_per_axis = 401;
  int refine_points_per_axis = 41;
};

namespace detail {

// Calls fn(x) for every point of the grid center + [−half, half]^n.
template <class Fn>
void for_each_grid_point(const Vector& center, double half, int points, Fn&& fn) {
  const auto n = center.size();
  const double step = 2.0 * half / (points - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector x(n);
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = center(i) - half + step * idx[static_cast<std::size_t>(i)];
    fn(x);
    Eigen::Index d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == points) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
}

// Minimal-norm grid point among {Φ ≤ min + δ}, δ = 1e−6(1 + |min|).
inline std::optional<Vector> grid_min_norm(const ConvexFunction& f, const Vector& center, double half, int points) {
  std::vector<std::pair<Vector, double>> values;
  double m = std::numeric_limits<double>::infinity();
  for_each_grid_point(center, half, points, [&](const Vector& x) {
    const double v = evaluate(f, x).to_double();
    if (std::isfinite(v)) {
      values.emplace_back(x, v);
      m = std::min(m, v);
    }
  });
  if (values.empty()) return std::nullopt;
  const double delta = 1e-6 * (1.0 + std::abs(m));
  const Vector* best = nullptr;
  for (const auto& [x, v] : values) {
    if (v <= m + delta && (!best || x.norm() < best->norm())) best = &x;
  }
  return *best;
}

inline Vector analytic_min_norm(const ConvexFunction& f);

inline Vector quadratic_min_norm(const atoms::Quadratic& q) {
  const Vector rhs = -q.b;
  if (!q.in_range(rhs)) throw UnboundedBelow("quadratic is unbounded below");
  return q.pinv_apply(rhs);
}

inline Vector pl_min_norm(const PiecewiseLinear1D& p) {
  auto iv = p.argmin_interval();
  if (!iv) throw UnboundedBelow("piecewise-linear function is unbounded below");
  Vector x(1);
  x(0) = std::clamp(0.0, iv->first, iv->second);
  return x;
}

inline Vector analytic_min_norm(const ConvexFunction& f) {
  if (auto q = as_quadratic(f)) return quadratic_min_norm(*q);
  if (auto p = as_piecewise_linear(f)) return pl_min_norm(*p);
  const auto n = f.dim();
  return std::visit(
      overloaded{
          [&](const atoms::IndicatorBox& b) -> Vector { return b.project(Vector::Zero(n)); },
          [&](const atoms::HalfSqDistToBox& d) -> Vector { return d.box.project(Vector::Zero(n)); },
          [&](const atoms::IndicatorHalfspace& h) -> Vector { return h.project(Vector::Zero(n)); },
          [&](const atoms::IndicatorAffine& h) -> Vector { return h.base; },
          [&](const atoms::NormOne&) -> Vector { return Vector::Zero(n); },
          [&](const comb::SeparableSum& s) -> Vector {
            Vector x(n);
            Eigen::Index off = 0;
            for (const auto& c : s.children) {
              x.segment(off, c.dim()) = analytic_min_norm(c);
              off += c.dim();
            }
            return x;
          },
          [&](const comb::Scale& t) -> Vector { return analytic_min_norm(t.f); },
          [&](const comb::ShiftValue& t) -> Vector { return analytic_min_norm(t.f); },
          [&](const comb::Translate& t) -> Vector {
            const Vector& s = t.shift;
            return std::visit(
                overloaded{
                    [&](const atoms::IndicatorBox& b) -> Vector { return Vector(Vector::Zero(n).cwiseMax(b.lo + s).cwiseMin(b.hi + s)); },
                    [&](const atoms::HalfSqDistToBox& d) -> Vector {
                      return Vector(Vector::Zero(n).cwiseMax(d.box.lo + s).cwiseMin(d.box.hi + s));
                    },
                    [&](const atoms::IndicatorHalfspace& h) -> Vector {
                      return atoms::IndicatorHalfspace(h.a, h.beta + h.a.dot(s)).project(Vector::Zero(n));
                    },
                    [&](const atoms::IndicatorAffine& h) -> Vector { return Vector(h.pinv * (h.b + h.A * s)); },
                    [&](const atoms::NormOne&) -> Vector { return s; },
                    [&](const auto&) -> Vector {
                      throw NoClosedForm("min_norm_oracle: no analytic rule for translate(" + kind_name(t.f) + ")");
                    },
                },
                t.f.node().v);
          },
          [&](const auto&) -> Vector { throw NoClosedForm("min_norm_oracle: no analytic rule for " + kind_name(f)); },
      },
      f.node().v);
}

}  // namespace detail

/// proj_{argmin Φ}(0).
/// Analytic: closed form for the registered cases (quadratics via the pseudoinverse,
/// box and halfspace projections, affine sets, 1D piecewise-linear functions,
/// separable sums of those). Brute: two-stage grid search, dimension ≤ 3.
inline Vector min_norm_oracle(const ConvexFunction& f, OracleMode mode, const BruteOptions& opt = {}) {
  if (mode == OracleMode::Analytic) return detail::analytic_min_norm(f);
  const auto n = f.dim();
  if (n > 3) throw std::invalid_argument("min_norm_oracle: brute mode needs dimension <= 3");
  auto coarse = detail::grid_min_norm(f, Vector::Zero(n), opt.radius, opt.points_per_axis);
  if (!coarse) throw std::runtime_error("min_norm_oracle: no finite value on the grid");
  const double step = 2.0 * opt.radius / (opt.points_per_axis - 1);
  auto fine = detail::grid_min_norm(f, *coarse, step, opt.refine_points_per_axis);
  return fine ? *fine : *coarse;
}

/// Analytic oracle when registered, otherwise brute force.
inline Vector min_norm_target(const ConvexFunction& f) {
  try {
    return min_norm_oracle(f, OracleMode::Analytic);
  } catch (const NoClosedForm&) {
    return min_norm_oracle(f, OracleMode::Brute);
  }
}

/// Grid points of [−radius, radius]^n lying in argmin Φ (within δ = 1e−6(1+|min|)).
inline std::vector<Vector> argmin_grid_sample(const ConvexFunction& f, double radius = 10.0, int points_per_axis = 401) {
  std::vector<std::pair<Vector, double>> values;
  double m = std::numeric_limits<double>::infinity();
  detail::for_each_grid_point(Vector::Zero(f.dim()), radius, points_per_axis, [&](const Vector& x) {
    const double v = evaluate(f, x).to_double();
    if (std::isfinite(v)) {
      values.emplace_back(x, v);
      m = std::min(m, v);
    }
  });
  std::vector<Vector> out;
  const double delta = 1e-6 * (1.0 + std::abs(m));
  for (auto& [x, v] : values) {
    if (v <= m + delta) out.push_back(std::move(x));
  }
  return out;
}

/// min Φ: conjugate at 0 when registered, grid minimum otherwise.
inline double min_value(const ConvexFunction& f) {
  try {
    return infimum(f);
  } catch (const NoConjugateRule&) {
    return grid_minimum(f);
  }
}

/// Quadratic-growth estimate of r for the hypothesis report, or nullopt when the
/// dimension is above 3, the grid misses argmin Φ, or no positive estimate is found.
inline H1ModelReport h1_model_report(const ConvexFunction& f, const Schedule& s) {
  if (f.dim() > 3) {
    H1ModelReport r;
    r.in_l2 = classify(s).in_l2;
    r.diagnostic = "dimension > 3: growth estimate skipped";
    return r;
  }
  const int pts = f.dim() <= 2 ? 401 : 81;
  const auto C = argmin_grid_sample(f, 10.0, pts);
  if (C.empty()) {
    H1ModelReport r;
    r.in_l2 = classify(s).in_l2;
    r.diagnostic = "argmin set not resolved by the grid: growth estimate skipped";
    return r;
  }
  return h1_model_check(f, s, C);
}

struct HypothesisFlags {
  bool slow = false;
  bool in_l2 = false;
  std::optional<double> h2_k;
  std::optional<double> h1_model_r;
};

struct Report {
  Vector target;
  double dist_to_target = 0.0;
  double phi_gap = 0.0;
  double v_norm_final = 0.0;
  double xy_gap_final = 0.0;
  std::optional<double> theta_over_eps_final;
  double theta_integral = 0.0;
  double energy_sum = 0.0;
  std::optional<double> energy_bound;
  HypothesisFlags hypothesis_flags;
};

struct ReportOptions {
  bool growth_estimate = true;  // run the grid estimate of r (dimension ≤ 3)
};

inline Report convergence_report(const Trajectory& traj, const ConvexFunction& f, double mu, const Schedule& s,
                                 const ReportOptions& opt = {}) {
  if (traj.samples.empty()) throw std::invalid_argument("convergence_report: empty trajectory");
  const Sample& last = traj.final();
  const double T = last.t;
  Report r;
  r.target = min_norm_target(f);
  r.dist_to_target = (last.x - r.target).norm();
  r.phi_gap = evaluate(f, last.x).to_double() - min_value(f);
  r.v_norm_final = last.v.norm();
  r.xy_gap_final = (last.x - last.y).norm();

  const double eT = s.eval(T);
  if (eT > 0) r.theta_over_eps_final = theta(f, mu, last.y) / eT;

  const auto& S = traj.samples;
  double prev = theta(f, mu, S.front().y);
  for (std::size_t i = 1; i < S.size(); ++i) {
    const double cur = theta(f, mu, S[i].y);
    r.theta_integral += 0.5 * (S[i].t - S[i - 1].t) * (prev + cur);
    prev = cur;
  }
  r.energy_sum = energy_sum(traj);
  r.energy_bound = energy_bound(traj.flow, f, mu, s, S.front().y, T);

  const auto cls = classify(s);
  r.hypothesis_flags.slow = cls.slow;
  r.hypothesis_flags.in_l2 = cls.in_l2;
  r.hypothesis_flags.h2_k = h2_constant(s);
  if (opt.growth_estimate) r.hypothesis_flags.h1_model_r = h1_model_report(f, s).r;
  return r;
}

struct ProbeSettings {
  double horizon = 200.0;
  IntegratorSettings integrator{1e-3, 100};
  Flow flow = Flow::RnTikhonov;
};

/// Final x(T) for each Cauchy datum under a fast control. Runs are independent and
/// execute concurrently.
inline std::vector<Vector> limit_dependence_probe(const ConvexFunction& f, double mu, const Schedule& s_fast,
                                                  const std::vector<std::pair<Vector, Vector>>& inits,
                                                  const ProbeSettings& settings = {}) {
  if (classify(s_fast).slow) throw std::invalid_argument("limit_dependence_probe: schedule is not fast");
  if (inits.empty()) throw std::invalid_argument("limit_dependence_probe: no initial data");
  std::vector<std::future<Vector>> jobs;
  jobs.reserve(inits.size());
  for (const auto& [x0, v0] : inits) {
    DynamicSpec spec{settings.flow, f, mu, s_fast, x0, v0, settings.horizon, settings.integrator};
    jobs.push_back(std::async(std::launch::async, [spec] { return integrate(spec).final().x; }));
  }
  std::vector<Vector> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace rnflow
