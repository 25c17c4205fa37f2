#include <gtest/gtest.h>

#include <cmath>

#include "imcmc/error.hpp"
#include "imcmc/weights.hpp"

using namespace imcmc;

TEST(Weights, OrderOneIsAllOnes) {
  const auto a = s_weights(1, 50);
  ASSERT_EQ(a.s.size(), 51u);
  for (double v : a.s) EXPECT_EQ(v, 1.0);
}

TEST(Weights, OrderTwoHarmonicTails) {
  const auto a = s_weights(2, 2);
  EXPECT_NEAR(a.s[0], 11.0 / 6.0, 1e-15);
  EXPECT_NEAR(a.s[1], 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(a.s[2], 1.0 / 3.0, 1e-15);
}

TEST(Weights, RecursionAgainstDirectSum) {
  const std::size_t n = 40;
  const auto a2 = s_weights(2, n);
  const auto a3 = s_weights(3, n);
  for (std::size_t p = 0; p <= n; ++p) {
    double direct = 0.0;
    for (std::size_t q = p; q <= n; ++q) direct += a2.s[q] / double(q + 1);
    EXPECT_NEAR(a3.s[p], direct, 1e-12);
  }
}

TEST(Weights, NonincreasingAndNormalized) {
  for (std::size_t k = 1; k <= 5; ++k) {
    for (std::size_t n : {0u, 1u, 7u, 100u, 10000u}) {
      const auto a = s_weights(k, n);
      double sum2 = 0.0;
      for (std::size_t p = 0; p <= n; ++p) {
        EXPECT_GE(a.s[p], 0.0);
        if (p > 0) EXPECT_LE(a.s[p], a.s[p - 1]);
        sum2 += a.w[p] * a.w[p];
      }
      EXPECT_NEAR(sum2, 1.0, 1e-12) << "k=" << k << " n=" << n;
    }
  }
}

TEST(Weights, ZeroOrderRejected) { EXPECT_THROW(s_weights(0, 3), InvalidArgument); }

TEST(Weights, LimitValues) {
  EXPECT_DOUBLE_EQ(weight_limit(0), 1.0);
  EXPECT_DOUBLE_EQ(weight_limit(1), 2.0);
  EXPECT_DOUBLE_EQ(weight_limit(2), 6.0);
  EXPECT_DOUBLE_EQ(weight_limit(3), 20.0);
}

TEST(Weights, LimitCheckConverges) {
  const double tol[] = {0.0, 0.02, 0.03, 0.05};
  for (std::size_t k = 1; k <= 3; ++k) {
    double prev = INFINITY;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
      const double rel = std::abs(weight_limit_check(k, n) / weight_limit(k) - 1.0);
      EXPECT_LT(rel, prev) << "k=" << k << " n=" << n;
      prev = rel;
    }
    EXPECT_LT(prev, tol[k]) << "k=" << k;
  }
}

TEST(Weights, OrderZeroAnalogueIsExact) {
  for (std::size_t n : {1u, 10u, 12345u}) {
    EXPECT_NEAR(weight_limit_check(0, n), double(n + 1) / double(n), 1e-12);
  }
}

TEST(Weights, FirstWeightDecays) {
  for (std::size_t k = 1; k <= 4; ++k) {
    // w(0) ~ (log n)^(k-1) / sqrt(n): slow for larger k but strictly decaying.
    const double first = s_weights(k, 10).w[0];
    double prev = first;
    for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
      const double w0 = s_weights(k, n).w[0];
      EXPECT_LT(w0, prev);
      prev = w0;
    }
    EXPECT_LT(prev, 0.5 * first) << "k=" << k;
  }
}
