#pragma once

// Moreau envelope Φ_μ, Yosida approximation ∇Φ_μ and the potential ψ with ∇ψ = prox_{μΦ}.

#include "rnflow/convex_function.hpp"

#include <utility>

namespace rnflow {

/// A function together with the envelope index μ. λ = 1/μ is always derived.
class EnvelopeContext {
 public:
  EnvelopeContext(ConvexFunction f, double mu) : f_(std::move(f)), mu_(mu) {
    if (!(mu > 0) || !std::isfinite(mu)) throw std::invalid_argument("EnvelopeContext: mu must be > 0");
  }

  const ConvexFunction& function() const { return f_; }
  double mu() const { return mu_; }
  double lambda() const { return 1.0 / mu_; }
  Eigen::Index dim() const { return f_.dim(); }

 private:
  ConvexFunction f_;
  double mu_;
};

/// prox, Yosida value and envelope value from a single prox evaluation.
struct EnvelopePoint {
  Vector x;      // prox_{μΦ}(y)
  Vector v;      // ∇Φ_μ(y)
  double value;  // Φ_μ(y)
};

inline EnvelopePoint envelope_point(const EnvelopeContext& ctx, const Vector& y) {
  const double mu = ctx.mu();
  Vector x = prox(ctx.function(), mu, y);
  Vector v = (y - x) / mu;
  const double value = evaluate(ctx.function(), x).value() + 0.5 * mu * v.squaredNorm();
  return {std::move(x), std::move(v), value};
}

/// Φ_μ(y) = Φ(prox y) + ‖y − prox y‖²/(2μ).
inline double envelope(const EnvelopeContext& ctx, const Vector& y) {
  const Vector x = prox(ctx.function(), ctx.mu(), y);
  return evaluate(ctx.function(), x).value() + (y - x).squaredNorm() / (2.0 * ctx.mu());
}

/// ∇Φ_μ(y) = (y − prox_{μΦ}(y))/μ.
inline Vector yosida(const EnvelopeContext& ctx, const Vector& y) {
  return (y - prox(ctx.function(), ctx.mu(), y)) / ctx.mu();
}

/// ψ(y) = ½‖y‖² − μΦ_μ(y).
inline double psi(const EnvelopeContext& ctx, const Vector& y) {
  return 0.5 * y.squaredNorm() - ctx.mu() * envelope(ctx, y);
}

/// ψ through the conjugate: μ(Φ*)_{1/μ}(y/μ). The inner prox of Φ* comes from the
/// Moreau decomposition, prox_{Φ*/μ}(y/μ) = ∇Φ_μ(y), so this equals μΦ*(v) + ½‖prox y‖².
/// Independent of psi() only through the conjugate rule; used as a cross-check.
inline double psi_via_conjugate(const EnvelopeContext& ctx, const Vector& y) {
  const double mu = ctx.mu();
  const Vector v = yosida(ctx, y);
  const ExtendedReal conj = conjugate(ctx.function(), v);
  const Vector u = y / mu - v;
  return mu * (conj.value() + 0.5 * mu * u.squaredNorm());
}

namespace detail {
template <class Fn>
Vector central_difference(Fn&& fn, const Vector& y, double h) {
  Vector g(y.size());
  Vector yp = y, ym = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    yp(i) = y(i) + h;
    ym(i) = y(i) - h;
    g(i) = (fn(yp) - fn(ym)) / (2.0 * h);
    yp(i) = ym(i) = y(i);
  }
  return g;
}
}  // namespace detail

/// ‖central-difference gradient of ψ at y − prox_{μΦ}(y)‖.
inline double grad_psi_discrepancy(const EnvelopeContext& ctx, const Vector& y, double h = 1e-4) {
  if (!(h > 0)) throw std::invalid_argument("grad_psi_discrepancy: h must be > 0");
  const Vector fd = detail::central_difference([&](const Vector& z) { return psi(ctx, z); }, y, h);
  return (fd - prox(ctx.function(), ctx.mu(), y)).norm();
}

/// ‖central-difference gradient of Φ_μ at y − ∇Φ_μ(y)‖.
inline double grad_envelope_discrepancy(const EnvelopeContext& ctx, const Vector& y, double h = 1e-4) {
  if (!(h > 0)) throw std::invalid_argument("grad_envelope_discrepancy: h must be > 0");
  const Vector fd = detail::central_difference([&](const Vector& z) { return envelope(ctx, z); }, y, h);
  return (fd - yosida(ctx, y)).norm();
}

}  // namespace rnflow
