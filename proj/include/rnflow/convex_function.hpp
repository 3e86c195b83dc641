#pragma once

// Proper closed convex functions on R^n, built from closed-form atoms and a small
// combinator calculus. Every node exposes evaluation and (where an exact formula
// exists) prox, conjugate and gradient. Missing rules raise, they are never
// approximated by inner iterations.

#include "rnflow/types.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rnflow {

/// Relative tolerance for indicator membership and conjugate domain tests.
inline constexpr double kFeasTol = 1e-9;

class ConvexFunction;

namespace atoms {

/// ½⟨Ax,x⟩ + ⟨b,x⟩ + c with A symmetric PSD. The eigendecomposition is cached.
struct Quadratic {
  Matrix A;
  Vector b;
  double c = 0.0;
  Matrix eigvecs;
  Vector eigvals;  // clamped at 0, ascending
  double rank_tol = 0.0;

  Quadratic(Matrix a, Vector bb, double cc) : A(std::move(a)), b(std::move(bb)), c(cc) {
    if (A.rows() != A.cols()) throw InvalidFunction("quadratic: A must be square");
    require_dim(A.rows(), b.size(), "quadratic: b");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw InvalidFunction("quadratic: A must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    eigvals = es.eigenvalues();
    eigvecs = es.eigenvectors();
    const double lmax = std::max(0.0, eigvals.maxCoeff());
    rank_tol = 1e-12 * std::max(1.0, lmax);
    if (eigvals.minCoeff() < -1e-10 * std::max(1.0, lmax)) {
      throw InvalidFunction("quadratic: A must be positive semidefinite");
    }
    eigvals = eigvals.cwiseMax(0.0);
  }

  Eigen::Index dim() const { return b.size(); }
  double max_eigenvalue() const { return eigvals.size() ? eigvals.maxCoeff() : 0.0; }

  /// A⁺z.
  Vector pinv_apply(const Vector& z) const {
    Vector w = eigvecs.transpose() * z;
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = eigvals(i) > rank_tol ? w(i) / eigvals(i) : 0.0;
    return eigvecs * w;
  }

  /// Component of z in ker A.
  Vector null_component(const Vector& z) const {
    Vector w = eigvecs.transpose() * z;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (eigvals(i) > rank_tol) w(i) = 0.0;
    }
    return eigvecs * w;
  }

  bool in_range(const Vector& z) const {
    return null_component(z).norm() <= kFeasTol * (1.0 + z.norm());
  }

  /// (I + μA)⁻¹ z.
  Vector resolvent(double mu, const Vector& z) const {
    Vector w = eigvecs.transpose() * z;
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) /= 1.0 + mu * eigvals(i);
    return eigvecs * w;
  }
};

/// |x| on R.
struct AbsValue {};

/// Indicator of {lo ≤ x ≤ hi}.
struct IndicatorBox {
  Vector lo, hi;
  IndicatorBox(Vector l, Vector h) : lo(std::move(l)), hi(std::move(h)) {
    require_dim(lo.size(), hi.size(), "box: hi");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (!(lo(i) <= hi(i))) {
        throw InvalidFunction("box: lo[" + std::to_string(i) + "] > hi[" + std::to_string(i) + "]");
      }
    }
  }
  Vector project(const Vector& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
  bool contains(const Vector& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double tol = kFeasTol * (1.0 + std::abs(lo(i)) + std::abs(hi(i)));
      if (x(i) < lo(i) - tol || x(i) > hi(i) + tol) return false;
    }
    return true;
  }
  /// σ_box(z).
  double support(const Vector& z) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += z(i) > 0 ? z(i) * hi(i) : z(i) * lo(i);
    return s;
  }
};

/// Indicator of {⟨a,x⟩ ≤ beta}.
struct IndicatorHalfspace {
  Vector a;
  double beta;
  IndicatorHalfspace(Vector aa, double bb) : a(std::move(aa)), beta(bb) {
    if (a.size() == 0 || a.norm() == 0.0) throw InvalidFunction("halfspace: normal a must be nonzero");
  }
  Vector project(const Vector& y) const {
    const double excess = a.dot(y) - beta;
    if (excess <= 0) return y;
    return y - (excess / a.squaredNorm()) * a;
  }
};

/// Indicator of {Ax = b}; the affine set must be nonempty.
struct IndicatorAffine {
  Matrix A;
  Vector b;
  Matrix pinv;      // A⁺
  Matrix row_proj;  // A⁺A, projector onto the row space
  Vector base;      // A⁺b, minimal-norm feasible point

  IndicatorAffine(Matrix aa, Vector bb) : A(std::move(aa)), b(std::move(bb)) {
    require_dim(A.rows(), b.size(), "affine: b");
    if (A.cols() == 0) throw InvalidFunction("affine: A has no columns");
    pinv = A.completeOrthogonalDecomposition().pseudoInverse();
    row_proj = pinv * A;
    base = pinv * b;
    if ((A * base - b).norm() > kFeasTol * (1.0 + b.norm())) {
      throw InvalidFunction("affine: {x : Ax = b} is empty");
    }
  }
  Vector project(const Vector& y) const { return y - pinv * (A * y - b); }
  bool contains(const Vector& x) const {
    return (A * x - b).norm() <= kFeasTol * (1.0 + b.norm() + A.norm() * x.norm());
  }
};

/// ‖x‖₁ on R^n.
struct NormOne {
  Eigen::Index n;
};

/// ½ dist²(x, box).
struct HalfSqDistToBox {
  IndicatorBox box;
};

/// Σ wᵢ|x − aᵢ| on R with wᵢ > 0.
struct AbsSum1D {
  std::vector<double> kinks;
  std::vector<double> weights;
  AbsSum1D(std::vector<double> k, std::vector<double> w) : kinks(std::move(k)), weights(std::move(w)) {
    if (kinks.size() != weights.size()) throw InvalidFunction("abs_sum: kinks and weights differ in length");
    if (kinks.empty()) throw InvalidFunction("abs_sum: needs at least one kink");
    for (double wi : weights) {
      if (!(wi > 0)) throw InvalidFunction("abs_sum: weights must be positive");
    }
  }
};

}  // namespace atoms

namespace comb {

/// Children act on consecutive coordinate blocks.
struct SeparableSum {
  std::vector<ConvexFunction> children;
};
/// x ↦ f(x − shift).
struct Translate;
/// x ↦ f(x) + ⟨slope, x⟩.
struct AddLinear;
/// x ↦ alpha·f(x), alpha > 0.
struct Scale;
/// x ↦ f(x) + value.
struct ShiftValue;
/// x ↦ Σ fᵢ(x), all children on the same space. Prox/conjugate exist only when
/// the sum reduces to a single quadratic or to a 1D piecewise-linear function.
struct Sum {
  std::vector<ConvexFunction> children;
};

}  // namespace comb

class ConvexFunction {
 public:
  struct Node;

  /// Empty placeholder; only valid as an assignment target.
  ConvexFunction() = default;

  static ConvexFunction quadratic(Matrix A, Vector b, double c = 0.0);
  static ConvexFunction abs_value();
  static ConvexFunction indicator_box(Vector lo, Vector hi);
  static ConvexFunction indicator_halfspace(Vector a, double beta);
  static ConvexFunction indicator_affine(Matrix A, Vector b);
  static ConvexFunction norm_one(Eigen::Index n);
  static ConvexFunction half_sq_dist_to_box(Vector lo, Vector hi);
  static ConvexFunction abs_sum(std::vector<double> kinks, std::vector<double> weights);

  static ConvexFunction separable_sum(std::vector<ConvexFunction> children);
  static ConvexFunction translate(ConvexFunction f, Vector shift);
  static ConvexFunction add_linear(ConvexFunction f, Vector slope);
  static ConvexFunction scale(ConvexFunction f, double alpha);
  static ConvexFunction shift_value(ConvexFunction f, double value);
  static ConvexFunction sum(std::vector<ConvexFunction> children);

  Eigen::Index dim() const { return dim_; }
  const Node& node() const {
    if (!node_) throw std::logic_error("ConvexFunction: use of an empty function");
    return *node_;
  }

 private:
  ConvexFunction(std::shared_ptr<const Node> node, Eigen::Index dim) : node_(std::move(node)), dim_(dim) {}

  std::shared_ptr<const Node> node_;
  Eigen::Index dim_ = 0;
};

namespace comb {
struct Translate {
  ConvexFunction f;
  Vector shift;
};
struct AddLinear {
  ConvexFunction f;
  Vector slope;
};
struct Scale {
  ConvexFunction f;
  double alpha;
};
struct ShiftValue {
  ConvexFunction f;
  double value;
};
}  // namespace comb

struct ConvexFunction::Node {
  using Variant = std::variant<atoms::Quadratic, atoms::AbsValue, atoms::IndicatorBox,
                               atoms::IndicatorHalfspace, atoms::IndicatorAffine, atoms::NormOne,
                               atoms::HalfSqDistToBox, atoms::AbsSum1D, comb::SeparableSum,
                               comb::Translate, comb::AddLinear, comb::Scale, comb::ShiftValue,
                               comb::Sum>;
  Variant v;
};

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

inline ConvexFunction ConvexFunction::quadratic(Matrix A, Vector b, double c) {
  atoms::Quadratic q(std::move(A), std::move(b), c);
  const auto n = q.dim();
  return {std::make_shared<const Node>(Node{std::move(q)}), n};
}
inline ConvexFunction ConvexFunction::abs_value() {
  return {std::make_shared<const Node>(Node{atoms::AbsValue{}}), 1};
}
inline ConvexFunction ConvexFunction::indicator_box(Vector lo, Vector hi) {
  atoms::IndicatorBox box(std::move(lo), std::move(hi));
  const auto n = box.lo.size();
  return {std::make_shared<const Node>(Node{std::move(box)}), n};
}
inline ConvexFunction ConvexFunction::indicator_halfspace(Vector a, double beta) {
  atoms::IndicatorHalfspace h(std::move(a), beta);
  const auto n = h.a.size();
  return {std::make_shared<const Node>(Node{std::move(h)}), n};
}
inline ConvexFunction ConvexFunction::indicator_affine(Matrix A, Vector b) {
  atoms::IndicatorAffine h(std::move(A), std::move(b));
  const auto n = h.A.cols();
  return {std::make_shared<const Node>(Node{std::move(h)}), n};
}
inline ConvexFunction ConvexFunction::norm_one(Eigen::Index n) {
  if (n <= 0) throw InvalidFunction("norm1: dimension must be positive");
  return {std::make_shared<const Node>(Node{atoms::NormOne{n}}), n};
}
inline ConvexFunction ConvexFunction::half_sq_dist_to_box(Vector lo, Vector hi) {
  atoms::HalfSqDistToBox d{atoms::IndicatorBox(std::move(lo), std::move(hi))};
  const auto n = d.box.lo.size();
  return {std::make_shared<const Node>(Node{std::move(d)}), n};
}
inline ConvexFunction ConvexFunction::abs_sum(std::vector<double> kinks, std::vector<double> weights) {
  return {std::make_shared<const Node>(Node{atoms::AbsSum1D(std::move(kinks), std::move(weights))}), 1};
}
inline ConvexFunction ConvexFunction::separable_sum(std::vector<ConvexFunction> children) {
  if (children.empty()) throw InvalidFunction("separable_sum: needs at least one child");
  Eigen::Index n = 0;
  for (const auto& c : children) n += c.dim();
  return {std::make_shared<const Node>(Node{comb::SeparableSum{std::move(children)}}), n};
}
inline ConvexFunction ConvexFunction::translate(ConvexFunction f, Vector shift) {
  require_dim(f.dim(), shift.size(), "translate: shift");
  const auto n = f.dim();
  return {std::make_shared<const Node>(Node{comb::Translate{std::move(f), std::move(shift)}}), n};
}
inline ConvexFunction ConvexFunction::add_linear(ConvexFunction f, Vector slope) {
  require_dim(f.dim(), slope.size(), "add_linear: slope");
  const auto n = f.dim();
  return {std::make_shared<const Node>(Node{comb::AddLinear{std::move(f), std::move(slope)}}), n};
}
inline ConvexFunction ConvexFunction::scale(ConvexFunction f, double alpha) {
  if (!(alpha > 0)) throw InvalidFunction("scale: alpha must be > 0");
  const auto n = f.dim();
  return {std::make_shared<const Node>(Node{comb::Scale{std::move(f), alpha}}), n};
}
inline ConvexFunction ConvexFunction::shift_value(ConvexFunction f, double value) {
  if (!std::isfinite(value)) throw InvalidFunction("shift_value: value must be finite");
  const auto n = f.dim();
  return {std::make_shared<const Node>(Node{comb::ShiftValue{std::move(f), value}}), n};
}
inline ConvexFunction ConvexFunction::sum(std::vector<ConvexFunction> children) {
  if (children.empty()) throw InvalidFunction("sum: needs at least one child");
  const auto n = children.front().dim();
  for (const auto& c : children) require_dim(n, c.dim(), "sum: child");
  return {std::make_shared<const Node>(Node{comb::Sum{std::move(children)}}), n};
}

inline std::string kind_name(const ConvexFunction& f) {
  return std::visit(detail::overloaded{
                        [](const atoms::Quadratic&) { return std::string("quadratic"); },
                        [](const atoms::AbsValue&) { return std::string("abs"); },
                        [](const atoms::IndicatorBox&) { return std::string("box"); },
                        [](const atoms::IndicatorHalfspace&) { return std::string("halfspace"); },
                        [](const atoms::IndicatorAffine&) { return std::string("affine"); },
                        [](const atoms::NormOne&) { return std::string("norm1"); },
                        [](const atoms::HalfSqDistToBox&) { return std::string("half_sq_dist_box"); },
                        [](const atoms::AbsSum1D&) { return std::string("abs_sum"); },
                        [](const comb::SeparableSum&) { return std::string("separable_sum"); },
                        [](const comb::Translate&) { return std::string("translate"); },
                        [](const comb::AddLinear&) { return std::string("add_linear"); },
                        [](const comb::Scale&) { return std::string("scale"); },
                        [](const comb::ShiftValue&) { return std::string("shift_value"); },
                        [](const comb::Sum&) { return std::string("sum"); },
                    },
                    f.node().v);
}

namespace detail {

// g(x) = Σ wᵢ|x − aᵢ| + slope·x + offset on R, kinks sorted and distinct.
struct PiecewiseLinear1D {
  std::vector<double> kinks;
  std::vector<double> weights;
  double slope = 0.0;
  double offset = 0.0;

  void normalize() {
    std::vector<std::size_t> order(kinks.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return kinks[i] < kinks[j]; });
    std::vector<double> k, w;
    for (auto i : order) {
      if (!k.empty() && k.back() == kinks[i]) {
        w.back() += weights[i];
      } else {
        k.push_back(kinks[i]);
        w.push_back(weights[i]);
      }
    }
    kinks = std::move(k);
    weights = std::move(w);
  }

  double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  double eval(double x) const {
    double s = slope * x + offset;
    for (std::size_t i = 0; i < kinks.size(); ++i) s += weights[i] * std::abs(x - kinks[i]);
    return s;
  }

  // Slope on the open interval right of kink j−1 and left of kink j (j = 0..K).
  std::vector<double> interval_slopes() const {
    const std::size_t K = kinks.size();
    std::vector<double> sig(K + 1);
    double right = total_weight();
    double left = 0.0;
    sig[0] = slope - right;
    for (std::size_t k = 0; k < K; ++k) {
      left += weights[k];
      right -= weights[k];
      sig[k + 1] = slope + left - right;
    }
    return sig;
  }

  double prox(double mu, double y) const {
    const std::size_t K = kinks.size();
    if (K == 0) return y - mu * slope;
    const auto sig = interval_slopes();
    // Scan thresholds a_k + μσ_{k−1} ≤ a_k + μσ_k in increasing order of y.
    for (std::size_t k = 0; k < K; ++k) {
      const double enter = kinks[k] + mu * sig[k];
      const double leave = kinks[k] + mu * sig[k + 1];
      if (y < enter) {
        double xi = y - mu * sig[k];
        if (k > 0) xi = std::max(xi, kinks[k - 1]);
        return std::min(xi, kinks[k]);
      }
      if (y <= leave) return kinks[k];
    }
    return std::max(y - mu * sig[K], kinks[K - 1]);
  }

  ExtendedReal conjugate(double z) const {
    const double W = total_weight();
    const double d = z - slope;
    if (std::abs(d) > W + kFeasTol * (1.0 + W + std::abs(z))) return ExtendedReal::infinity();
    if (kinks.empty()) return {-offset};
    double best = -std::numeric_limits<double>::infinity();
    for (double a : kinks) best = std::max(best, z * a - eval(a));
    return {best};
  }

  // argmin interval (ends may be infinite); empty optional if unbounded below.
  std::optional<std::pair<double, double>> argmin_interval() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (std::abs(slope) > total_weight()) return std::nullopt;
    const auto sig = interval_slopes();
    const std::size_t K = kinks.size();
    for (std::size_t j = 0; j <= K; ++j) {
      if (sig[j] == 0.0) return std::pair{j == 0 ? -inf : kinks[j - 1], j == K ? inf : kinks[j]};
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (sig[k] < 0.0 && sig[k + 1] > 0.0) return std::pair{kinks[k], kinks[k]};
    }
    return std::nullopt;
  }
};

inline std::optional<atoms::Quadratic> as_quadratic(const ConvexFunction& f);
inline std::optional<PiecewiseLinear1D> as_piecewise_linear(const ConvexFunction& f);

inline std::optional<atoms::Quadratic> as_quadratic(const ConvexFunction& f) {
  using Q = std::optional<atoms::Quadratic>;
  return std::visit(
      overloaded{
          [](const atoms::Quadratic& q) -> Q { return q; },
          [&](const comb::SeparableSum& s) -> Q {
            const auto n = f.dim();
            Matrix A = Matrix::Zero(n, n);
            Vector b(n);
            double c = 0.0;
            Eigen::Index off = 0;
            for (const auto& child : s.children) {
              auto q = as_quadratic(child);
              if (!q) return std::nullopt;
              const auto m = child.dim();
              A.block(off, off, m, m) = q->A;
              b.segment(off, m) = q->b;
              c += q->c;
              off += m;
            }
            return atoms::Quadratic(A, b, c);
          },
          [](const comb::Translate& t) -> Q {
            auto q = as_quadratic(t.f);
            if (!q) return std::nullopt;
            const Vector& s = t.shift;
            return atoms::Quadratic(q->A, q->b - q->A * s, 0.5 * s.dot(q->A * s) - q->b.dot(s) + q->c);
          },
          [](const comb::AddLinear& t) -> Q {
            auto q = as_quadratic(t.f);
            if (!q) return std::nullopt;
            return atoms::Quadratic(q->A, q->b + t.slope, q->c);
          },
          [](const comb::Scale& t) -> Q {
            auto q = as_quadratic(t.f);
            if (!q) return std::nullopt;
            return atoms::Quadratic(t.alpha * q->A, t.alpha * q->b, t.alpha * q->c);
          },
          [](const comb::ShiftValue& t) -> Q {
            auto q = as_quadratic(t.f);
            if (!q) return std::nullopt;
            return atoms::Quadratic(q->A, q->b, q->c + t.value);
          },
          [&](const comb::Sum& s) -> Q {
            const auto n = f.dim();
            Matrix A = Matrix::Zero(n, n);
            Vector b = Vector::Zero(n);
            double c = 0.0;
            for (const auto& child : s.children) {
              auto q = as_quadratic(child);
              if (!q) return std::nullopt;
              A += q->A;
              b += q->b;
              c += q->c;
            }
            return atoms::Quadratic(A, b, c);
          },
          [](const auto&) -> Q { return std::nullopt; },
      },
      f.node().v);
}

inline std::optional<PiecewiseLinear1D> as_piecewise_linear(const ConvexFunction& f) {
  using P = std::optional<PiecewiseLinear1D>;
  if (f.dim() != 1) return std::nullopt;
  P out = std::visit(
      overloaded{
          [](const atoms::AbsValue&) -> P { return PiecewiseLinear1D{{0.0}, {1.0}, 0.0, 0.0}; },
          [](const atoms::NormOne&) -> P { return PiecewiseLinear1D{{0.0}, {1.0}, 0.0, 0.0}; },
          [](const atoms::AbsSum1D& a) -> P { return PiecewiseLinear1D{a.kinks, a.weights, 0.0, 0.0}; },
          [](const atoms::Quadratic& q) -> P {
            if (q.A(0, 0) != 0.0) return std::nullopt;
            return PiecewiseLinear1D{{}, {}, q.b(0), q.c};
          },
          [](const comb::SeparableSum& s) -> P { return as_piecewise_linear(s.children.front()); },
          [](const comb::Translate& t) -> P {
            auto p = as_piecewise_linear(t.f);
            if (!p) return std::nullopt;
            const double s = t.shift(0);
            for (auto& k : p->kinks) k += s;
            p->offset -= p->slope * s;
            return p;
          },
          [](const comb::AddLinear& t) -> P {
            auto p = as_piecewise_linear(t.f);
            if (!p) return std::nullopt;
            p->slope += t.slope(0);
            return p;
          },
          [](const comb::Scale& t) -> P {
            auto p = as_piecewise_linear(t.f);
            if (!p) return std::nullopt;
            for (auto& w : p->weights) w *= t.alpha;
            p->slope *= t.alpha;
            p->offset *= t.alpha;
            return p;
          },
          [](const comb::ShiftValue& t) -> P {
            auto p = as_piecewise_linear(t.f);
            if (!p) return std::nullopt;
            p->offset += t.value;
            return p;
          },
          [](const comb::Sum& s) -> P {
            PiecewiseLinear1D acc;
            for (const auto& child : s.children) {
              auto p = as_piecewise_linear(child);
              if (!p) return std::nullopt;
              acc.kinks.insert(acc.kinks.end(), p->kinks.begin(), p->kinks.end());
              acc.weights.insert(acc.weights.end(), p->weights.begin(), p->weights.end());
              acc.slope += p->slope;
              acc.offset += p->offset;
            }
            return acc;
          },
          [](const auto&) -> P { return std::nullopt; },
      },
      f.node().v);
  if (out) out->normalize();
  return out;
}

template <class Fn>
Vector blockwise(const comb::SeparableSum& s, const Vector& x, Fn&& fn) {
  Vector out(x.size());
  Eigen::Index off = 0;
  for (const auto& child : s.children) {
    const auto m = child.dim();
    out.segment(off, m) = fn(child, Vector(x.segment(off, m)));
    off += m;
  }
  return out;
}

inline double soft_threshold(double y, double t) {
  if (y > t) return y - t;
  if (y < -t) return y + t;
  return 0.0;
}

}  // namespace detail

/// Φ(x) ∈ R ∪ {+∞}.
inline ExtendedReal evaluate(const ConvexFunction& f, const Vector& x) {
  require_dim(f.dim(), x.size(), "evaluate");
  using R = ExtendedReal;
  return std::visit(
      detail::overloaded{
          [&](const atoms::Quadratic& q) -> R { return {0.5 * x.dot(q.A * x) + q.b.dot(x) + q.c}; },
          [&](const atoms::AbsValue&) -> R { return {std::abs(x(0))}; },
          [&](const atoms::IndicatorBox& b) -> R { return b.contains(x) ? R(0.0) : R::infinity(); },
          [&](const atoms::IndicatorHalfspace& h) -> R {
            const double tol = kFeasTol * (1.0 + std::abs(h.beta) + h.a.norm() * x.norm());
            return h.a.dot(x) <= h.beta + tol ? R(0.0) : R::infinity();
          },
          [&](const atoms::IndicatorAffine& h) -> R { return h.contains(x) ? R(0.0) : R::infinity(); },
          [&](const atoms::NormOne&) -> R { return {x.lpNorm<1>()}; },
          [&](const atoms::HalfSqDistToBox& d) -> R { return {0.5 * (x - d.box.project(x)).squaredNorm()}; },
          [&](const atoms::AbsSum1D& a) -> R {
            double s = 0.0;
            for (std::size_t i = 0; i < a.kinks.size(); ++i) s += a.weights[i] * std::abs(x(0) - a.kinks[i]);
            return {s};
          },
          [&](const comb::SeparableSum& s) -> R {
            R acc(0.0);
            Eigen::Index off = 0;
            for (const auto& child : s.children) {
              acc = acc + evaluate(child, x.segment(off, child.dim()));
              off += child.dim();
            }
            return acc;
          },
          [&](const comb::Translate& t) -> R { return evaluate(t.f, x - t.shift); },
          [&](const comb::AddLinear& t) -> R { return evaluate(t.f, x) + R(t.slope.dot(x)); },
          [&](const comb::Scale& t) -> R { return t.alpha * evaluate(t.f, x); },
          [&](const comb::ShiftValue& t) -> R { return evaluate(t.f, x) + R(t.value); },
          [&](const comb::Sum& s) -> R {
            R acc(0.0);
            for (const auto& child : s.children) acc = acc + evaluate(child, x);
            return acc;
          },
      },
      f.node().v);
}

/// prox_{μf}(y) = argmin_ξ f(ξ) + ‖y − ξ‖²/(2μ).
inline Vector prox(const ConvexFunction& f, double mu, const Vector& y) {
  if (!(mu > 0)) throw std::invalid_argument("prox: mu must be > 0");
  require_dim(f.dim(), y.size(), "prox");
  return std::visit(
      detail::overloaded{
          [&](const atoms::Quadratic& q) -> Vector { return q.resolvent(mu, y - mu * q.b); },
          [&](const atoms::AbsValue&) -> Vector {
            Vector out(1);
            out(0) = detail::soft_threshold(y(0), mu);
            return out;
          },
          [&](const atoms::IndicatorBox& b) -> Vector { return b.project(y); },
          [&](const atoms::IndicatorHalfspace& h) -> Vector { return h.project(y); },
          [&](const atoms::IndicatorAffine& h) -> Vector { return h.project(y); },
          [&](const atoms::NormOne&) -> Vector {
            return y.unaryExpr([mu](double v) { return detail::soft_threshold(v, mu); });
          },
          [&](const atoms::HalfSqDistToBox& d) -> Vector { return (y + mu * d.box.project(y)) / (1.0 + mu); },
          [&](const atoms::AbsSum1D& a) -> Vector {
            detail::PiecewiseLinear1D p{a.kinks, a.weights, 0.0, 0.0};
            p.normalize();
            Vector out(1);
            out(0) = p.prox(mu, y(0));
            return out;
          },
          [&](const comb::SeparableSum& s) -> Vector {
            return detail::blockwise(s, y, [mu](const ConvexFunction& c, const Vector& yc) { return prox(c, mu, yc); });
          },
          [&](const comb::Translate& t) -> Vector { return t.shift + prox(t.f, mu, y - t.shift); },
          [&](const comb::AddLinear& t) -> Vector { return prox(t.f, mu, y - mu * t.slope); },
          [&](const comb::Scale& t) -> Vector { return prox(t.f, mu * t.alpha, y); },
          [&](const comb::ShiftValue& t) -> Vector { return prox(t.f, mu, y); },
          [&](const comb::Sum&) -> Vector {
            if (auto q = detail::as_quadratic(f)) return q->resolvent(mu, y - mu * q->b);
            if (auto p = detail::as_piecewise_linear(f)) {
              Vector out(1);
              out(0) = p->prox(mu, y(0));
              return out;
            }
            throw NoProxRule("no prox rule for this sum: children reduce neither to one quadratic nor to a 1D piecewise-linear function");
          },
      },
      f.node().v);
}

/// Φ*(z) = sup_x ⟨x,z⟩ − Φ(x).
inline ExtendedReal conjugate(const ConvexFunction& f, const Vector& z) {
  require_dim(f.dim(), z.size(), "conjugate");
  using R = ExtendedReal;
  auto quadratic_conj = [](const atoms::Quadratic& q, const Vector& zz) -> R {
    const Vector d = zz - q.b;
    if (!q.in_range(d)) return R::infinity();
    return {0.5 * d.dot(q.pinv_apply(d)) - q.c};
  };
  return std::visit(
      detail::overloaded{
          [&](const atoms::Quadratic& q) -> R { return quadratic_conj(q, z); },
          [&](const atoms::AbsValue&) -> R {
            return std::abs(z(0)) <= 1.0 + kFeasTol ? R(0.0) : R::infinity();
          },
          [&](const atoms::IndicatorBox& b) -> R { return {b.support(z)}; },
          [&](const atoms::IndicatorHalfspace& h) -> R {
            const double t = h.a.dot(z) / h.a.squaredNorm();
            const double tol = kFeasTol * (1.0 + z.norm());
            if (t < -tol || (z - t * h.a).norm() > tol) return R::infinity();
            return {std::max(t, 0.0) * h.beta};
          },
          [&](const atoms::IndicatorAffine& h) -> R {
            if ((z - h.row_proj * z).norm() > kFeasTol * (1.0 + z.norm())) return R::infinity();
            return {z.dot(h.base)};
          },
          [&](const atoms::NormOne&) -> R {
            return z.lpNorm<Eigen::Infinity>() <= 1.0 + kFeasTol ? R(0.0) : R::infinity();
          },
          [&](const atoms::HalfSqDistToBox& d) -> R { return {d.box.support(z) + 0.5 * z.squaredNorm()}; },
          [&](const atoms::AbsSum1D& a) -> R {
            detail::PiecewiseLinear1D p{a.kinks, a.weights, 0.0, 0.0};
            p.normalize();
            return p.conjugate(z(0));
          },
          [&](const comb::SeparableSum& s) -> R {
            R acc(0.0);
            Eigen::Index off = 0;
            for (const auto& child : s.children) {
              acc = acc + conjugate(child, z.segment(off, child.dim()));
              off += child.dim();
            }
            return acc;
          },
          [&](const comb::Translate& t) -> R { return conjugate(t.f, z) + R(z.dot(t.shift)); },
          [&](const comb::AddLinear& t) -> R { return conjugate(t.f, z - t.slope); },
          [&](const comb::Scale& t) -> R { return t.alpha * conjugate(t.f, z / t.alpha); },
          [&](const comb::ShiftValue& t) -> R { return conjugate(t.f, z) - t.value; },
          [&](const comb::Sum&) -> R {
            if (auto q = detail::as_quadratic(f)) return quadratic_conj(*q, z);
            if (auto p = detail::as_piecewise_linear(f)) return p->conjugate(z(0));
            throw NoConjugateRule("no conjugate rule for this sum");
          },
      },
      f.node().v);
}

/// Whether a gradient rule exists (f differentiable everywhere with a closed-form gradient).
inline bool is_smooth(const ConvexFunction& f) {
  return std::visit(
      detail::overloaded{
          [](const atoms::Quadratic&) { return true; },
          [](const atoms::HalfSqDistToBox&) { return true; },
          [](const comb::SeparableSum& s) {
            return std::all_of(s.children.begin(), s.children.end(), [](const auto& c) { return is_smooth(c); });
          },
          [](const comb::Sum& s) {
            return std::all_of(s.children.begin(), s.children.end(), [](const auto& c) { return is_smooth(c); });
          },
          [](const comb::Translate& t) { return is_smooth(t.f); },
          [](const comb::AddLinear& t) { return is_smooth(t.f); },
          [](const comb::Scale& t) { return is_smooth(t.f); },
          [](const comb::ShiftValue& t) { return is_smooth(t.f); },
          [](const auto&) { return false; },
      },
      f.node().v);
}

/// ∇Φ(x); throws NoClosedForm for nonsmooth nodes.
inline Vector gradient(const ConvexFunction& f, const Vector& x) {
  require_dim(f.dim(), x.size(), "gradient");
  return std::visit(
      detail::overloaded{
          [&](const atoms::Quadratic& q) -> Vector { return q.A * x + q.b; },
          [&](const atoms::HalfSqDistToBox& d) -> Vector { return x - d.box.project(x); },
          [&](const comb::SeparableSum& s) -> Vector {
            return detail::blockwise(s, x, [](const ConvexFunction& c, const Vector& xc) { return gradient(c, xc); });
          },
          [&](const comb::Sum& s) -> Vector {
            Vector g = Vector::Zero(x.size());
            for (const auto& c : s.children) g += gradient(c, x);
            return g;
          },
          [&](const comb::Translate& t) -> Vector { return gradient(t.f, x - t.shift); },
          [&](const comb::AddLinear& t) -> Vector { return gradient(t.f, x) + t.slope; },
          [&](const comb::Scale& t) -> Vector { return t.alpha * gradient(t.f, x); },
          [&](const comb::ShiftValue& t) -> Vector { return gradient(t.f, x); },
          [&](const auto&) -> Vector { throw NoClosedForm("gradient: " + kind_name(f) + " is not differentiable"); },
      },
      f.node().v);
}

/// Lipschitz constant of ∇Φ when Φ is smooth; exact for quadratics.
inline std::optional<double> lipschitz_constant(const ConvexFunction& f) {
  using O = std::optional<double>;
  return std::visit(
      detail::overloaded{
          [](const atoms::Quadratic& q) -> O { return q.max_eigenvalue(); },
          [](const atoms::HalfSqDistToBox&) -> O { return 1.0; },
          [](const comb::SeparableSum& s) -> O {
            double L = 0.0;
            for (const auto& c : s.children) {
              auto l = lipschitz_constant(c);
              if (!l) return std::nullopt;
              L = std::max(L, *l);
            }
            return L;
          },
          [&](const comb::Sum& s) -> O {
            if (auto q = detail::as_quadratic(f)) return q->max_eigenvalue();
            double L = 0.0;
            for (const auto& c : s.children) {
              auto l = lipschitz_constant(c);
              if (!l) return std::nullopt;
              L += *l;
            }
            return L;
          },
          [](const comb::Translate& t) -> O { return lipschitz_constant(t.f); },
          [](const comb::AddLinear& t) -> O { return lipschitz_constant(t.f); },
          [](const comb::Scale& t) -> O {
            auto l = lipschitz_constant(t.f);
            if (!l) return std::nullopt;
            return t.alpha * *l;
          },
          [](const comb::ShiftValue& t) -> O { return lipschitz_constant(t.f); },
          [](const auto&) -> O { return std::nullopt; },
      },
      f.node().v);
}

/// Fenchel–Young equality test for v ∈ ∂Φ(x): |Φ(x) + Φ*(v) − ⟨x,v⟩| ≤ tol.
inline bool subgradient_check(const ConvexFunction& f, const Vector& x, const Vector& v, double tol) {
  require_dim(f.dim(), v.size(), "subgradient_check: v");
  const ExtendedReal fx = evaluate(f, x);
  const ExtendedReal fs = conjugate(f, v);
  if (fx.is_infinite() || fs.is_infinite()) return false;
  return std::abs(fx.value() + fs.value() - x.dot(v)) <= tol;
}

/// inf Φ = −Φ*(0). Throws UnboundedBelow when Φ*(0) = +∞.
inline double infimum(const ConvexFunction& f) {
  const ExtendedReal c0 = conjugate(f, Vector::Zero(f.dim()));
  if (c0.is_infinite()) throw UnboundedBelow("function is unbounded below");
  return -c0.value();
}

/// Brute-force minimum over the grid [−radius, radius]^n (dimension ≤ 3).
inline double grid_minimum(const ConvexFunction& f, double radius = 10.0, int points_per_axis = 401) {
  const auto n = f.dim();
  if (n > 3) throw std::invalid_argument("grid_minimum: dimension > 3");
  const double step = 2.0 * radius / (points_per_axis - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector x(n);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = -radius + step * idx[static_cast<std::size_t>(i)];
    best = std::min(best, evaluate(f, x).to_double());
    Eigen::Index d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == points_per_axis) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
  return best;
}

/// ShiftValue(f, −inf f): same prox, minimum value 0. Uses the conjugate at 0 when a
/// rule is registered, otherwise a grid minimum for dimensions ≤ 3.
inline ConvexFunction shift_to_zero_min(const ConvexFunction& f) {
  double m;
  try {
    m = infimum(f);
  } catch (const NoConjugateRule&) {
    if (f.dim() > 3) throw;
    m = grid_minimum(f);
    if (!std::isfinite(m)) throw UnboundedBelow("shift_to_zero_min: no finite grid minimum");
  }
  if (m == 0.0) return f;
  return ConvexFunction::shift_value(f, -m);
}

/// A random point of argmin Φ, when the node can describe its argmin set.
inline std::optional<Vector> argmin_sample(const ConvexFunction& f, std::mt19937_64& rng) {
  using O = std::optional<Vector>;
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto randn = [&](Eigen::Index n) {
    Vector g(n);
    for (Eigen::Index i = 0; i < n; ++i) g(i) = gauss(rng);
    return g;
  };
  auto in_box = [&](const atoms::IndicatorBox& b) {
    Vector x(b.lo.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = b.lo(i) + unif(rng) * (b.hi(i) - b.lo(i));
    return x;
  };
  auto from_quadratic = [&](const atoms::Quadratic& q) -> O {
    const Vector rhs = -q.b;
    if (!q.in_range(rhs)) return std::nullopt;
    return q.pinv_apply(rhs) + q.null_component(randn(q.dim()));
  };
  auto from_pl = [&](const detail::PiecewiseLinear1D& p) -> O {
    auto iv = p.argmin_interval();
    if (!iv) return std::nullopt;
    auto [lo, hi] = *iv;
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      lo = -1.0;
      hi = 1.0;
    } else if (!std::isfinite(lo)) {
      lo = hi - 1.0;
    } else if (!std::isfinite(hi)) {
      hi = lo + 1.0;
    }
    Vector x(1);
    x(0) = lo + unif(rng) * (hi - lo);
    return x;
  };
  return std::visit(
      detail::overloaded{
          [&](const atoms::Quadratic& q) -> O { return from_quadratic(q); },
          [&](const atoms::AbsValue&) -> O { return Vector::Zero(1); },
          [&](const atoms::NormOne& n) -> O { return Vector::Zero(n.n); },
          [&](const atoms::IndicatorBox& b) -> O { return in_box(b); },
          [&](const atoms::HalfSqDistToBox& d) -> O { return in_box(d.box); },
          [&](const atoms::IndicatorHalfspace& h) -> O {
            return h.project(randn(h.a.size())) - unif(rng) * h.a.normalized();
          },
          [&](const atoms::IndicatorAffine& h) -> O {
            const Vector g = randn(h.A.cols());
            return h.base + (g - h.row_proj * g);
          },
          [&](const atoms::AbsSum1D& a) -> O {
            detail::PiecewiseLinear1D p{a.kinks, a.weights, 0.0, 0.0};
            p.normalize();
            return from_pl(p);
          },
          [&](const comb::SeparableSum& s) -> O {
            Vector x(f.dim());
            Eigen::Index off = 0;
            for (const auto& c : s.children) {
              auto xc = argmin_sample(c, rng);
              if (!xc) return std::nullopt;
              x.segment(off, c.dim()) = *xc;
              off += c.dim();
            }
            return x;
          },
          [&](const comb::Translate& t) -> O {
            auto x = argmin_sample(t.f, rng);
            if (!x) return std::nullopt;
            return *x + t.shift;
          },
          [&](const comb::Scale& t) -> O { return argmin_sample(t.f, rng); },
          [&](const comb::ShiftValue& t) -> O { return argmin_sample(t.f, rng); },
          [&](const auto&) -> O {  // AddLinear, Sum
            if (auto q = detail::as_quadratic(f)) return from_quadratic(*q);
            if (auto p = detail::as_piecewise_linear(f)) return from_pl(*p);
            return std::nullopt;
          },
      },
      f.node().v);
}

}  // namespace rnflow
