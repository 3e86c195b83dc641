#pragma once

// The regularized Newton flow and the steepest-descent-with-control flow, both
// integrated in the variable y = x + μv:
//
//   RN-Tikhonov:  ẏ = −μ∇Φ_μ(y) − μ ε(t) prox_{μΦ}(y)
//   SDC:          ẏ = −μ∇Φ_μ(y) − ε(t) y
//
// x = prox_{μΦ}(y) and v = ∇Φ_μ(y) are recovered at every sample.

#include "rnflow/moreau.hpp"
#include "rnflow/schedule.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace rnflow {

enum class Flow { RnTikhonov, Sdc };

inline std::string to_string(Flow f) { return f == Flow::RnTikhonov ? "rn_tikhonov" : "sdc"; }

inline Flow flow_from_string(const std::string& s) {
  if (s == "rn_tikhonov" || s == "rn") return Flow::RnTikhonov;
  if (s == "sdc") return Flow::Sdc;
  throw std::invalid_argument("unknown flow '" + s + "' (expected rn_tikhonov or sdc)");
}

struct IntegratorSettings {
  double h = 1e-3;
  int sample_stride = 10;
};

struct DynamicSpec {
  Flow flow = Flow::RnTikhonov;
  ConvexFunction f;
  double mu = 1.0;
  Schedule schedule = Schedule::zero();
  Vector x0;
  Vector v0;
  double horizon = 0.0;
  IntegratorSettings integrator;
};

class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// v ∈ ∂Φ(x). Fenchel equality when a conjugate rule exists; otherwise the
/// resolvent characterization x = prox_Φ(x + v).
inline bool is_subgradient(const ConvexFunction& f, const Vector& x, const Vector& v, double tol) {
  try {
    return subgradient_check(f, x, v, tol);
  } catch (const NoConjugateRule&) {
    return (prox(f, 1.0, x + v) - x).norm() <= tol * (1.0 + x.norm());
  }
}

inline void validate(const DynamicSpec& spec) {
  if (!(spec.mu > 0) || !std::isfinite(spec.mu)) throw InvalidSpec("mu must be > 0");
  if (!(spec.integrator.h > 0) || !std::isfinite(spec.integrator.h)) throw InvalidSpec("h must be > 0");
  if (!(spec.horizon >= 0) || !std::isfinite(spec.horizon)) throw InvalidSpec("T must be >= 0");
  if (spec.integrator.sample_stride < 1) throw InvalidSpec("sample_stride must be >= 1");
  if (spec.x0.size() != spec.f.dim()) throw InvalidSpec("x0 has the wrong dimension");
  if (spec.v0.size() != spec.f.dim()) throw InvalidSpec("v0 has the wrong dimension");
  if (!is_subgradient(spec.f, spec.x0, spec.v0, 1e-7)) throw InvalidSpec("v0 not a subgradient at x0");
}

/// Right-hand side of the RN-Tikhonov flow.
inline Vector rhs_rn(const ConvexFunction& f, double mu, const Schedule& s, double t, const Vector& y) {
  const Vector x = prox(f, mu, y);
  return -(y - x) - (mu * s.eval(t)) * x;
}

/// Right-hand side of the SDC flow (viscosity g = ‖·‖²/(2μ) + Φ).
inline Vector rhs_sdc(const ConvexFunction& f, double mu, const Schedule& s, double t, const Vector& y) {
  const Vector x = prox(f, mu, y);
  return -(y - x) - s.eval(t) * y;
}

inline Vector rhs(Flow flow, const ConvexFunction& f, double mu, const Schedule& s, double t, const Vector& y) {
  return flow == Flow::RnTikhonov ? rhs_rn(f, mu, s, t, y) : rhs_sdc(f, mu, s, t, y);
}

struct Sample {
  double t;
  Vector y;
  Vector x;
  Vector v;
  double phi_x;
  double norm_x;
  double ydot_norm;
};

struct Trajectory {
  Flow flow = Flow::RnTikhonov;
  double mu = 1.0;
  std::vector<Sample> samples;

  const Sample& final() const { return samples.back(); }

  /// Sample whose time is closest to t.
  const Sample& nearest(double t) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (std::abs(samples[i].t - t) < std::abs(samples[best].t - t)) best = i;
    }
    return samples[best];
  }

  /// Samples with time ≤ t (relative tolerance 1e-12).
  Trajectory prefix_until(double t) const {
    Trajectory out{flow, mu, {}};
    for (const auto& s : samples) {
      if (s.t <= t * (1.0 + 1e-12) + 1e-12) out.samples.push_back(s);
    }
    return out;
  }
};

inline Sample make_sample(const DynamicSpec& spec, double t, const Vector& y) {
  const double mu = spec.mu;
  Vector x = prox(spec.f, mu, y);
  Vector v = (y - x) / mu;
  const double eps = spec.schedule.eval(t);
  const Vector ydot = spec.flow == Flow::RnTikhonov ? Vector(-(y - x) - (mu * eps) * x) : Vector(-(y - x) - eps * y);
  const double phi = evaluate(spec.f, x).to_double();
  const double nx = x.norm();
  return {t, y, std::move(x), std::move(v), phi, nx, ydot.norm()};
}

/// Number of fixed steps covering [0, T]; the last step is shortened if T/h is not integral.
inline long long step_count(double T, double h) {
  if (T == 0.0) return 0;
  return static_cast<long long>(std::ceil(T / h - 1e-9));
}

/// Classical fixed-step RK4 from y(0) = x0 + μv0, recording every sample_stride-th step
/// and the final state.
inline Trajectory integrate(const DynamicSpec& spec) {
  validate(spec);
  const double mu = spec.mu;
  const double h = spec.integrator.h;
  const double T = spec.horizon;
  const int stride = spec.integrator.sample_stride;
  const long long n = step_count(T, h);

  Trajectory traj{spec.flow, mu, {}};
  traj.samples.reserve(static_cast<std::size_t>(n / stride + 2));

  Vector y = spec.x0 + mu * spec.v0;
  traj.samples.push_back(make_sample(spec, 0.0, y));

  auto F = [&](double t, const Vector& z) { return rhs(spec.flow, spec.f, mu, spec.schedule, t, z); };

  for (long long k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    const double hk = (k == n - 1) ? T - t : h;
    const Vector k1 = F(t, y);
    const Vector k2 = F(t + 0.5 * hk, y + (0.5 * hk) * k1);
    const Vector k3 = F(t + 0.5 * hk, y + (0.5 * hk) * k2);
    const Vector k4 = F(t + hk, y + hk * k3);
    y += (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) {
      throw NumericalAbort("non-finite state at t = " + std::to_string(t + hk));
    }
    if ((k + 1) % stride == 0 || k + 1 == n) {
      const double tk = (k + 1 == n) ? T : static_cast<double>(k + 1) * h;
      traj.samples.push_back(make_sample(spec, tk, y));
    }
  }
  return traj;
}

/// max over interior samples of the residual of the original (x, v) system, with
/// ẋ and v̇ from central differences of the samples:
///   RN:  λẋ + v̇ + v + εx
///   SDC: λẋ + v̇ + (1+ε)v + λεx
/// Only triples with equal spacing on both sides are used.
inline double residual_original(const Trajectory& traj, double lambda, const Schedule& s) {
  const auto& S = traj.samples;
  if (S.size() < 3) throw std::invalid_argument("residual_original: need at least 3 samples");
  double worst = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 1; i + 1 < S.size(); ++i) {
    const double dl = S[i].t - S[i - 1].t;
    const double dr = S[i + 1].t - S[i].t;
    if (std::abs(dl - dr) > 1e-9 * std::max(dl, dr)) continue;
    const double two_d = S[i + 1].t - S[i - 1].t;
    const Vector xdot = (S[i + 1].x - S[i - 1].x) / two_d;
    const Vector vdot = (S[i + 1].v - S[i - 1].v) / two_d;
    const double eps = s.eval(S[i].t);
    Vector r = lambda * xdot + vdot;
    if (traj.flow == Flow::RnTikhonov) {
      r += S[i].v + eps * S[i].x;
    } else {
      r += (1.0 + eps) * S[i].v + (lambda * eps) * S[i].x;
    }
    worst = std::max(worst, r.norm());
    ++used;
  }
  if (used == 0) throw std::invalid_argument("residual_original: no uniformly spaced sample triple");
  return worst;
}

/// Θ(y) = μΦ_μ(y).
inline double theta(const ConvexFunction& f, double mu, const Vector& y) {
  return mu * envelope(EnvelopeContext(f, mu), y);
}

/// Trapezoidal Σ‖ẏ(tᵢ)‖²Δᵢ over the samples.
inline double energy_sum(const Trajectory& traj) {
  double acc = 0.0;
  const auto& S = traj.samples;
  for (std::size_t i = 1; i < S.size(); ++i) {
    acc += 0.5 * (S[i].t - S[i - 1].t) * (S[i].ydot_norm * S[i].ydot_norm + S[i - 1].ydot_norm * S[i - 1].ydot_norm);
  }
  return acc;
}

/// Right-hand side of the finite-energy estimate
///   ∫₀ᵀ‖ẏ‖² ≤ Θ(y₀) + ε(0)Ψ(y₀) + |m|ε(T) + m(ε(T) − ε(0)),  m = inf Ψ.
/// RN flow: Ψ = μψ and m = −μ²Φ(0), absent when Φ(0) = +∞.
/// SDC flow: Ψ = ½‖·‖² and m = 0.
inline std::optional<double> energy_bound(Flow flow, const ConvexFunction& f, double mu, const Schedule& s,
                                          const Vector& y0, double T) {
  const EnvelopeContext ctx(f, mu);
  const double theta0 = mu * envelope(ctx, y0);
  const double e0 = s.eval(0.0);
  const double eT = s.eval(T);
  if (flow == Flow::Sdc) return theta0 + e0 * 0.5 * y0.squaredNorm();
  const ExtendedReal phi0 = evaluate(f, Vector::Zero(f.dim()));
  if (phi0.is_infinite()) return std::nullopt;
  const double m = -mu * mu * phi0.value();
  const double Psi0 = mu * psi(ctx, y0);
  return theta0 + e0 * Psi0 + std::abs(m) * eT + m * (eT - e0);
}

}  // namespace rnflow
