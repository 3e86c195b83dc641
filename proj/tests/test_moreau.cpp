#include "support.hpp"

#include <gtest/gtest.h>

using namespace rnflow;
using namespace testing_support;

namespace {

ConvexFunction half_sq(Eigen::Index n) { return ConvexFunction::quadratic(Matrix::Identity(n, n), Vector::Zero(n)); }

// prox is affine along every axis on [y − δ, y + δ].
bool prox_affine_near(const ConvexFunction& f, double mu, const Vector& y, double delta) {
  const Vector p0 = prox(f, mu, y);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Vector e = Vector::Zero(y.size());
    e(i) = delta;
    if ((prox(f, mu, y + e) - 2 * p0 + prox(f, mu, y - e)).norm() > 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST(Envelope, Examples) {
  EXPECT_DOUBLE_EQ(envelope(EnvelopeContext(half_sq(1), 1.0), vec({2})), 1.0);
  EXPECT_DOUBLE_EQ(envelope(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({2})), 1.5);
  EXPECT_DOUBLE_EQ(envelope(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({0})), 0.0);
  EXPECT_DOUBLE_EQ(envelope(EnvelopeContext(ConvexFunction::indicator_box(vec({1}), vec({2})), 1.0), vec({1.3})), 0.0);
}

TEST(Envelope, ExamplesAgreeWithGridInfimum) {
  // Φ_μ(y) as a brute-force infimum over ξ.
  auto brute = [](const ConvexFunction& f, double mu, const Vector& y) {
    const Vector x = grid_prox(f, mu, y);
    return evaluate(f, x).value() + (y - x).squaredNorm() / (2 * mu);
  };
  EXPECT_NEAR(brute(half_sq(1), 1.0, vec({2})), 1.0, 1e-9);
  EXPECT_NEAR(brute(ConvexFunction::abs_value(), 1.0, vec({2})), 1.5, 1e-9);
}

TEST(Yosida, Examples) {
  EXPECT_DOUBLE_EQ(yosida(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({2}))(0), 1.0);
  EXPECT_TRUE(yosida(EnvelopeContext(half_sq(2), 1.0), vec({2, 0})).isApprox(vec({1, 0})));
  EXPECT_EQ(yosida(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({0}))(0), 0.0);
}

TEST(Psi, Examples) {
  EXPECT_DOUBLE_EQ(psi(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({2})), 0.5);
  EXPECT_DOUBLE_EQ(psi(EnvelopeContext(half_sq(1), 1.0), vec({2})), 1.0);
  EXPECT_DOUBLE_EQ(psi(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({0})), 0.0);
}

TEST(GradPsiDiscrepancy, Examples) {
  EXPECT_LE(grad_psi_discrepancy(EnvelopeContext(ConvexFunction::abs_value(), 1.0), vec({2}), 1e-4), 1e-6);
  EXPECT_LE(grad_psi_discrepancy(EnvelopeContext(half_sq(2), 1.0), vec({2, 0}), 1e-4), 1e-8);
  EXPECT_LE(grad_psi_discrepancy(EnvelopeContext(ConvexFunction::indicator_box(vec({1}), vec({2})), 1.0), vec({1.5}), 1e-5), 1e-6);
}

TEST(EnvelopeContext, Validation) {
  EXPECT_THROW(EnvelopeContext(half_sq(1), 0.0), std::invalid_argument);
  EXPECT_THROW(EnvelopeContext(half_sq(1), -2.0), std::invalid_argument);
  const EnvelopeContext ctx(half_sq(1), 0.25);
  EXPECT_DOUBLE_EQ(ctx.lambda(), 4.0);
  EXPECT_THROW(grad_psi_discrepancy(ctx, vec({1}), 0.0), std::invalid_argument);
}

TEST(EnvelopePoint, ConsistentWithSeparateCalls) {
  std::mt19937_64 rng(20);
  for (const auto& fam : families()) {
    const auto f = fam.make(rng);
    const EnvelopeContext ctx(f, 0.8);
    const Vector y = randn(rng, f.dim(), 2.0);
    const auto p = envelope_point(ctx, y);
    EXPECT_TRUE(p.x.isApprox(prox(f, 0.8, y)));
    EXPECT_LT((p.v - yosida(ctx, y)).norm(), 1e-12);
    EXPECT_NEAR(p.value, envelope(ctx, y), 1e-12 * (1 + std::abs(p.value))) << fam.name;
  }
}

TEST(Psi, DualFormulaAgrees) {
  std::mt19937_64 rng(21);
  for (const auto& fam : families()) {
    for (int k = 0; k < 50; ++k) {
      const auto f = fam.make(rng);
      const EnvelopeContext ctx(f, uniform(rng, 0.1, 3.0));
      const Vector y = randn(rng, f.dim(), 3.0);
      const double a = psi(ctx, y);
      EXPECT_NEAR(a, psi_via_conjugate(ctx, y), 1e-8 * (1 + std::abs(a))) << fam.name;
    }
  }
}

TEST(Psi, GradientIsProxAwayFromKinks) {
  const double h = 1e-4;
  std::mt19937_64 rng(22);
  for (const auto& fam : families()) {
    int checked = 0;
    for (int k = 0; k < 100; ++k) {
      const auto f = fam.make(rng);
      const EnvelopeContext ctx(f, uniform(rng, 0.2, 3.0));
      const Vector y = randn(rng, f.dim(), 3.0);
      if (!prox_affine_near(f, ctx.mu(), y, 10 * h)) continue;
      ++checked;
      EXPECT_LE(grad_psi_discrepancy(ctx, y, h), 10 * h * h + 1e-9) << fam.name << " y=" << y.transpose();
      EXPECT_LE(grad_envelope_discrepancy(ctx, y, h), (10 * h * h + 1e-9) / ctx.mu()) << fam.name;
    }
    EXPECT_GT(checked, 50) << fam.name;
  }
}

TEST(Psi, GradientIsProxAtKinkImages) {
  // ψ is C¹ even where prox has a kink; central differences then lose one order.
  const double h = 1e-4;
  const EnvelopeContext abs_ctx(ConvexFunction::abs_value(), 1.0);
  for (double y : {-1.0, 1.0}) EXPECT_LE(grad_psi_discrepancy(abs_ctx, vec({y}), h), h);
  const EnvelopeContext box_ctx(ConvexFunction::indicator_box(vec({1, -1}), vec({2, 0})), 0.5);
  EXPECT_LE(grad_psi_discrepancy(box_ctx, vec({1, 0}), h), h);
  const EnvelopeContext kinks_ctx(ConvexFunction::abs_sum({-1, 1}, {1, 1}), 1.0);
  for (double y : {-3.0, -1.0, 1.0, 3.0}) EXPECT_LE(grad_psi_discrepancy(kinks_ctx, vec({y}), h), h);
}

TEST(Envelope, NonincreasingInMu) {
  std::mt19937_64 rng(23);
  for (const auto& fam : families()) {
    for (int k = 0; k < 50; ++k) {
      const auto f = fam.make(rng);
      const Vector y = randn(rng, f.dim(), 3.0);
      const double m1 = uniform(rng, 0.05, 2.0);
      const double m2 = m1 + uniform(rng, 0.01, 2.0);
      EXPECT_GE(envelope(EnvelopeContext(f, m1), y), envelope(EnvelopeContext(f, m2), y) - 1e-12) << fam.name;
    }
  }
}

TEST(Envelope, BelowPhiAndFinite) {
  std::mt19937_64 rng(24);
  for (const auto& fam : families()) {
    for (int k = 0; k < 50; ++k) {
      const auto f = fam.make(rng);
      const Vector y = randn(rng, f.dim(), 3.0);
      const double e = envelope(EnvelopeContext(f, 0.7), y);
      EXPECT_TRUE(std::isfinite(e));
      EXPECT_LE(e, evaluate(f, y).to_double() + 1e-12) << fam.name;
    }
  }
}

TEST(Yosida, LipschitzWithConstantOneOverMu) {
  std::mt19937_64 rng(25);
  for (const auto& fam : families()) {
    for (int k = 0; k < 50; ++k) {
      const auto f = fam.make(rng);
      const EnvelopeContext ctx(f, uniform(rng, 0.1, 3.0));
      const Vector y1 = randn(rng, f.dim(), 3.0);
      const Vector y2 = randn(rng, f.dim(), 3.0);
      EXPECT_LE((yosida(ctx, y2) - yosida(ctx, y1)).norm(), (y2 - y1).norm() / ctx.mu() + 1e-12) << fam.name;
    }
  }
}

TEST(Psi, ConvexByMidpointSampling) {
  std::mt19937_64 rng(26);
  for (const auto& fam : families()) {
    for (int k = 0; k < 50; ++k) {
      const auto f = fam.make(rng);
      const EnvelopeContext ctx(f, uniform(rng, 0.1, 3.0));
      const Vector a = randn(rng, f.dim(), 3.0);
      const Vector b = randn(rng, f.dim(), 3.0);
      const double mid = psi(ctx, 0.5 * (a + b));
      EXPECT_LE(mid, 0.5 * (psi(ctx, a) + psi(ctx, b)) + 1e-10) << fam.name;
    }
  }
}
