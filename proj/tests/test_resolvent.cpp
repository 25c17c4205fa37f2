#include <gtest/gtest.h>

#include <optional>
#include <random>

#include "imcmc/error.hpp"
#include "imcmc/model.hpp"
#include "imcmc/presets.hpp"
#include "imcmc/resolvent.hpp"
#include "test_util.hpp"

using namespace imcmc;

namespace {

SpaceRef two() { return FiniteSpace::make("S2", 2); }

IntegralOperator chain(const SpaceRef& s) {
  Eigen::Matrix2d m;
  m << 0.9, 0.1, 0.2, 0.8;
  return IntegralOperator::markov(s, s, m);
}

}  // namespace

TEST(Resolvent, InvariantMeasure) {
  auto s = two();
  auto pi = invariant_measure(chain(s));
  EXPECT_NEAR(pi(0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(pi(1), 1.0 / 3, 1e-15);
  std::mt19937_64 rng(1);
  auto s4 = FiniteSpace::make("S4", 4);
  auto mu = testutil::random_probability(s4, rng);
  EXPECT_LE(max_abs_diff(invariant_measure(IntegralOperator::rank_one(s4, mu)), mu), 1e-15);

  auto toy = toy_fk_model(0.3, {0.5, 1.0, 1.5});
  auto nu = testutil::random_probability(toy.path_space(1), rng);
  EXPECT_LE(max_abs_diff(invariant_measure(mh_kernel(toy, 2, nu)), fk_map(toy, 1, nu)), 1e-12);
}

TEST(Resolvent, ContractionIndex) {
  std::mt19937_64 rng(2);
  auto s = FiniteSpace::make("S5", 5);
  auto c = contraction_index(testutil::random_markov(s, rng));
  EXPECT_EQ(c.n0, 1u);
  EXPECT_NEAR(c.p_n0, 2.0 / (1.0 - c.m_n0), 1e-15);
  Eigen::Matrix3d perm;
  perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  auto s3 = FiniteSpace::make("S3", 3);
  EXPECT_THROW(contraction_index(IntegralOperator::markov(s3, s3, perm)), NumericalError);
  EXPECT_THROW(invariant_measure(IntegralOperator::markov(s3, s3, perm)), NumericalError);
  // Sparse kernel that needs several steps.
  Eigen::Matrix3d lazy;
  lazy << 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5, 0, 0.5;
  auto cl = contraction_index(IntegralOperator::markov(s3, s3, lazy));
  EXPECT_EQ(cl.n0, 1u);
  Eigen::Matrix3d cyc;
  cyc << 0, 1, 0, 0, 0, 1, 0.5, 0, 0.5;
  EXPECT_GT(contraction_index(IntegralOperator::markov(s3, s3, cyc)).n0, 1u);
}

TEST(Resolvent, ClosedForms) {
  auto s = two();
  auto m = chain(s);
  auto b = make_bundle(m);
  // Centered f: P fbar = fbar / (1 - 0.7).
  TestFunction f = TestFunction::indicator(s, 0);
  TestFunction fbar = f - TestFunction::constant(s, 2.0 / 3);
  auto pf = apply_operator(b.resolvent, fbar);
  EXPECT_NEAR(pf(0), fbar(0) / 0.3, 1e-13);
  EXPECT_NEAR(pf(1), fbar(1) / 0.3, 1e-13);
  EXPECT_LE(apply_operator(b.resolvent, TestFunction::constant(s, 1.0)).sup_norm(), 1e-14);

  std::mt19937_64 rng(3);
  auto s4 = FiniteSpace::make("S4", 4);
  auto mu = testutil::random_probability(s4, rng);
  auto r1 = make_bundle(IntegralOperator::rank_one(s4, mu));
  auto expect = IntegralOperator::identity(s4) - IntegralOperator::rank_one(s4, mu);
  EXPECT_LE(max_abs_diff(r1.resolvent, expect), 1e-14);
  EXPECT_LE(poisson_residual(r1), 1e-15);
}

TEST(Resolvent, PoissonResidualDetectsCorruption) {
  auto s = two();
  auto b = make_bundle(chain(s));
  EXPECT_LE(poisson_residual(b), 1e-10);
  Eigen::MatrixXd p = b.resolvent.matrix();
  p(1, 0) += 1e-3;
  ResolventBundle bad{b.kernel, b.invariant, IntegralOperator::general(s, s, p), b.contraction};
  EXPECT_GE(poisson_residual(bad), 1e-4);
}

TEST(Resolvent, LocalVariance) {
  auto s = two();
  auto b = make_bundle(chain(s));
  EXPECT_NEAR(local_variance(b, TestFunction::indicator(s, 0)), 34.0 / 27.0, 1e-12);
  EXPECT_NEAR(local_variance_series(b, TestFunction::indicator(s, 0)), 34.0 / 27.0, 1e-10);
  EXPECT_NEAR(local_variance(b, TestFunction::constant(s, 3.0)), 0.0, 1e-15);

  std::mt19937_64 rng(4);
  auto s5 = FiniteSpace::make("S5", 5);
  auto mu = testutil::random_probability(s5, rng);
  auto r1 = make_bundle(IntegralOperator::rank_one(s5, mu));
  auto f = testutil::random_function(s5, rng);
  const double m1 = integrate(mu, f);
  const double iid = integrate(mu, f.times(f)) - m1 * m1;
  EXPECT_NEAR(local_variance(r1, f), iid, 1e-13);
}

TEST(ResolventProperty, BundlesOnRandomKernels) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(2, 7);
  for (int t = 0; t < 60; ++t) {
    auto s = FiniteSpace::make("S", static_cast<std::size_t>(size(rng)));
    auto m = testutil::random_markov(s, rng, t % 2 ? 0.6 : 0.0);
    std::optional<ResolventBundle> made;
    try {
      made = make_bundle(m);
    } catch (const NumericalError&) {
      continue;  // reducible or periodic draw
    }
    const ResolventBundle& b = *made;
    EXPECT_LE(invariance_residual(b), 1e-12);
    EXPECT_LE(poisson_residual(b), 1e-10);
    EXPECT_LE(b.resolvent.sup_norm(), b.contraction.p_n0 + 1e-12);
    EXPECT_LE(max_abs_diff(b.resolvent, resolvent_series(m, b.invariant)), 1e-8);

    auto f = testutil::random_function(s, rng);
    auto g = testutil::random_function(s, rng);
    auto h = testutil::random_function(s, rng);
    const double v = local_variance(b, f);
    EXPECT_GE(v, -1e-10);
    EXPECT_NEAR(local_covariance(b, f, f), v, 1e-10 * std::max(1.0, v));
    EXPECT_NEAR(local_covariance(b, f, g), local_covariance(b, g, f), 1e-12);
    EXPECT_NEAR(local_covariance(b, f, TestFunction::constant(s, 2.0)), 0.0, 1e-12);
    EXPECT_NEAR(local_covariance(b, f, g * 2.5 + h),
                2.5 * local_covariance(b, f, g) + local_covariance(b, f, h), 1e-10);
  }
}

TEST(ResolventProperty, ModelKernelsAtLimit) {
  for (double p : {0.2, 0.5, 0.8}) {
    ModelSpec model = toy_fk_model(p, {0.5, 1.0, 1.5, 2.0});
    for (std::size_t l = 0; l <= 3; ++l) {
      auto b = make_bundle(limit_kernel(model, l), limit_measure(model, l));
      EXPECT_LE(poisson_residual(b), 1e-10);
      EXPECT_LE(invariance_residual(b), 1e-12);
    }
  }
}
