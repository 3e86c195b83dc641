#include "support.hpp"

#include <gtest/gtest.h>

using namespace rnflow;
using namespace testing_support;

TEST(Schedule, EvalAndDerivExamples) {
  const auto s = Schedule::power_law(1, 1);
  EXPECT_DOUBLE_EQ(s.eval(0), 1.0);
  EXPECT_DOUBLE_EQ(s.deriv(0), -1.0);
  EXPECT_NEAR(Schedule::power_law(2, 0.75).eval(3), 0.70710678118654752, 1e-15);
  EXPECT_EQ(Schedule::zero().eval(7), 0.0);
  EXPECT_EQ(Schedule::zero().deriv(7), 0.0);
  EXPECT_EQ(Schedule::constant(0.3).eval(1e9), 0.3);
}

TEST(Schedule, DerivMatchesFiniteDifference) {
  std::mt19937_64 rng(30);
  for (int k = 0; k < 200; ++k) {
    const auto s = Schedule::power_law(uniform(rng, 0.1, 5), uniform(rng, 0, 3));
    const double t = uniform(rng, 0.01, 50);
    const double h = 1e-5;
    EXPECT_NEAR(s.deriv(t), (s.eval(t + h) - s.eval(t - h)) / (2 * h), 1e-7);
  }
}

TEST(Schedule, NegativeTimeThrows) {
  EXPECT_THROW(Schedule::power_law(1, 1).eval(-1e-3), std::domain_error);
  EXPECT_THROW(Schedule::zero().deriv(-1), std::domain_error);
  EXPECT_THROW(Schedule::power_law(1, 1).integral(-1), std::domain_error);
}

TEST(Schedule, InvalidParametersThrow) {
  EXPECT_THROW(Schedule::power_law(0, 1), std::invalid_argument);
  EXPECT_THROW(Schedule::power_law(1, -0.5), std::invalid_argument);
  EXPECT_THROW(Schedule::constant(-1), std::invalid_argument);
}

TEST(Schedule, IntegralExamples) {
  EXPECT_NEAR(Schedule::power_law(1, 1).integral(std::exp(1.0) - 1), 1.0, 1e-15);
  EXPECT_NEAR(Schedule::power_law(1, 2).integral(std::numeric_limits<double>::infinity()), 1.0, 1e-15);
  EXPECT_NEAR(Schedule::power_law(1, 2).integral(1e12), 1.0, 1e-11);
  EXPECT_EQ(Schedule::zero().integral(100), 0.0);
  EXPECT_TRUE(std::isinf(Schedule::power_law(1, 0.75).integral(std::numeric_limits<double>::infinity())));
}

TEST(Schedule, IntegralMatchesQuadrature) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 50; ++k) {
    const auto s = Schedule::power_law(uniform(rng, 0.1, 3), uniform(rng, 0, 2.5));
    const double T = uniform(rng, 0.5, 20);
    // Composite Simpson with 20000 panels.
    const int n = 20000;
    const double h = T / n;
    double acc = s.eval(0) + s.eval(T);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4 : 2) * s.eval(i * h);
    EXPECT_NEAR(s.integral(T), acc * h / 3, 1e-9 * (1 + acc * h / 3)) << "p=" << s.p();
  }
}

TEST(Classify, Examples) {
  auto c = classify(Schedule::power_law(1, 0.75));
  EXPECT_TRUE(c.slow);
  EXPECT_TRUE(c.in_l2);
  c = classify(Schedule::power_law(1, 2));
  EXPECT_FALSE(c.slow);
  EXPECT_TRUE(c.in_l2);
  c = classify(Schedule::power_law(1, 0.5));
  EXPECT_TRUE(c.slow);
  EXPECT_FALSE(c.in_l2);
  c = classify(Schedule::constant(2));
  EXPECT_TRUE(c.slow);
  EXPECT_FALSE(c.in_l2);
  c = classify(Schedule::zero());
  EXPECT_FALSE(c.slow);
  EXPECT_TRUE(c.in_l2);
}

TEST(Classify, ConsistentWithIntegralGrowth) {
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 2.0, 3.0}) {
    const auto s = Schedule::power_law(1.3, p);
    const double i2 = s.integral(1e2), i4 = s.integral(1e4), i6 = s.integral(1e6);
    // Slow: the increments do not shrink geometrically; fast: they do, towards a finite limit.
    const bool unbounded = (i6 - i4) >= 0.5 * (i4 - i2);
    EXPECT_EQ(classify(s).slow, unbounded) << "p=" << p;
    EXPECT_EQ(classify(s).slow, std::isinf(s.integral(std::numeric_limits<double>::infinity()))) << "p=" << p;
  }
}

TEST(Classify, L2MembershipMatchesSquaredIntegral) {
  // ∫ε² for c(1+t)^{-p} is the integral of the power law c²(1+t)^{-2p}.
  for (double p : {0.3, 0.5, 0.6, 0.75, 1.0, 2.0}) {
    const auto s = Schedule::power_law(0.8, p);
    const auto sq = Schedule::power_law(0.64, 2 * p);
    EXPECT_EQ(classify(s).in_l2, !classify(sq).slow) << "p=" << p;
  }
}

TEST(Schedule, EvalNonincreasing) {
  std::mt19937_64 rng(32);
  for (int k = 0; k < 1000; ++k) {
    const auto s = Schedule::power_law(uniform(rng, 0.1, 5), uniform(rng, 0, 3));
    const double t1 = uniform(rng, 0, 1e3);
    const double t2 = t1 + uniform(rng, 0, 1e3);
    EXPECT_GE(s.eval(t1), s.eval(t2));
    EXPECT_GE(s.eval(t1), 0.0);
    EXPECT_LE(s.deriv(t1), 0.0);
  }
}

TEST(H2Constant, Examples) {
  EXPECT_DOUBLE_EQ(*h2_constant(Schedule::power_law(1, 1)), 1.0);
  EXPECT_DOUBLE_EQ(*h2_constant(Schedule::power_law(2, 0.75)), 0.375);
  EXPECT_FALSE(h2_constant(Schedule::power_law(1, 2)).has_value());
}

TEST(H2Constant, ExampleVerifiedOnTimeGrid) {
  // sup_t −ε̇/ε² over a t-grid, computed from eval/deriv only.
  const auto s = Schedule::power_law(2, 0.75);
  double sup = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double t = 0.01 * i;
    sup = std::max(sup, -s.deriv(t) / (s.eval(t) * s.eval(t)));
  }
  EXPECT_NEAR(sup, 0.375, 1e-12);
}

TEST(H2Constant, InequalityHoldsOnLongGrid) {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 20; ++k) {
    const auto s = Schedule::power_law(uniform(rng, 0.1, 5), uniform(rng, 0, 1));
    const double kk = *h2_constant(s);
    for (int i = 0; i < 10000; ++i) {
      const double t = 1e6 * i / 9999.0;
      const double e = s.eval(t);
      EXPECT_LE(-kk * e * e - s.deriv(t), 1e-12) << "p=" << s.p() << " t=" << t;
    }
  }
}

TEST(H2Constant, SmallestConstant) {
  // Any smaller k fails at t = 0.
  for (double p : {0.3, 0.75, 1.0}) {
    const auto s = Schedule::power_law(1.7, p);
    const double k = 0.999 * *h2_constant(s);
    EXPECT_GT(-k * s.eval(0) * s.eval(0) - s.deriv(0), 0.0);
  }
}

TEST(H2Check, Report) {
  const auto r = h2_check(Schedule::power_law(1, 0.75));
  EXPECT_TRUE(r.holds());
  EXPECT_DOUBLE_EQ(r.lipschitz, 0.75);
  EXPECT_FALSE(h2_check(Schedule::power_law(1, 2)).holds());
  EXPECT_FALSE(h2_check(Schedule::constant(1)).holds());
}

TEST(H1ModelCheck, Examples) {
  const auto hyper = ConvexFunction::quadratic(Matrix::Ones(2, 2), vec({-2, -2}), 2);
  auto rep = h1_model_report(hyper, Schedule::power_law(1, 0.75));
  ASSERT_TRUE(rep.r.has_value());
  EXPECT_GE(*rep.r, 1.0);
  EXPECT_LE(*rep.r, 2.0 + 1e-9);
  EXPECT_TRUE(rep.holds);

  const auto dist = ConvexFunction::half_sq_dist_to_box(vec({1}), vec({2}));
  rep = h1_model_report(dist, Schedule::power_law(1, 0.75));
  ASSERT_TRUE(rep.r.has_value());
  EXPECT_NEAR(*rep.r, 1.0, 1e-9);
  EXPECT_TRUE(rep.holds);

  rep = h1_model_report(ConvexFunction::quadratic(Matrix::Identity(1, 1), vec({0})), Schedule::power_law(1, 0.4));
  EXPECT_FALSE(rep.holds);
  EXPECT_FALSE(rep.diagnostic.empty());
}

TEST(H1ModelCheck, ExplicitSampler) {
  // C = {x₁ + x₂ = 2} sampled densely along the line.
  std::vector<Vector> C;
  for (int i = -400; i <= 400; ++i) {
    const double s = 0.025 * i;
    C.push_back(vec({1 + s, 1 - s}));
  }
  const auto hyper = ConvexFunction::quadratic(Matrix::Ones(2, 2), vec({-2, -2}), 2);
  const auto rep = h1_model_check(hyper, Schedule::power_law(1, 0.75), C);
  ASSERT_TRUE(rep.r.has_value());
  EXPECT_NEAR(*rep.r, 2.0, 0.1);
}

TEST(H1ModelCheck, NonpositiveEstimateFails) {
  // Φ vanishes off the sampled argmin set: the grid sees r = 0.
  const auto zero = ConvexFunction::quadratic(Matrix::Zero(1, 1), vec({0}));
  const auto rep = h1_model_check(zero, Schedule::power_law(1, 0.75), {vec({0})});
  EXPECT_FALSE(rep.r.has_value());
  EXPECT_FALSE(rep.holds);
  EXPECT_FALSE(rep.diagnostic.empty());
}

TEST(H1ModelCheck, PreconditionsThrow) {
  const auto q = ConvexFunction::quadratic(Matrix::Identity(4, 4), Vector::Zero(4));
  EXPECT_THROW(h1_model_check(q, Schedule::power_law(1, 1), {Vector::Zero(4)}), std::invalid_argument);
  EXPECT_THROW(h1_model_check(ConvexFunction::abs_value(), Schedule::power_law(1, 1), {}), std::invalid_argument);
}
