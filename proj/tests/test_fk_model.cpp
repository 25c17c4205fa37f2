#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imcmc/error.hpp"
#include "imcmc/fk_model.hpp"
#include "imcmc/model.hpp"
#include "imcmc/presets.hpp"
#include "imcmc/resolvent.hpp"
#include "test_util.hpp"

using namespace imcmc;

namespace {

// Random FK model on bases of the given sizes; potentials in [gmin, 1].
FKModel random_fk(const std::vector<std::size_t>& sizes, std::mt19937_64& rng, double gmin = 0.1,
                  bool unit_potentials = false) {
  std::vector<SpaceRef> spaces;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    spaces.push_back(FiniteSpace::make("B" + std::to_string(l), sizes[l]));
  }
  Measure init = testutil::random_probability(spaces[0], rng, 0.05);
  auto m0 = IntegralOperator::rank_one(spaces[0], init);
  std::vector<IntegralOperator> trans;
  std::vector<TestFunction> pots;
  std::uniform_real_distribution<double> g(gmin, 1.0);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(sizes[l]), static_cast<Eigen::Index>(sizes[l + 1]));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m.row(i) = testutil::random_simplex(sizes[l + 1], rng, 0.05).transpose();
    }
    trans.push_back(IntegralOperator::markov(spaces[l], spaces[l + 1], m, 1e-10));
    Eigen::VectorXd v(static_cast<Eigen::Index>(sizes[l]));
    for (auto& x : v) x = unit_potentials ? 1.0 : g(rng);
    pots.emplace_back(spaces[l], v);
  }
  return FKModel(spaces, init, m0, trans, pots);
}

// Brute-force weight of a path given as base coordinates.
double path_weight(const FKModel& m, const std::vector<std::size_t>& x) {
  double w = m.initial()(x[0]);
  for (std::size_t k = 1; k < x.size(); ++k) w *= m.transition(k)(x[k - 1], x[k]);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) w *= m.potential(k)(x[k]);
  return w;
}

}  // namespace

TEST(FkModel, PathSpaceSizes) {
  std::mt19937_64 rng(1);
  auto m = random_fk({2, 3, 2}, rng);
  EXPECT_EQ(path_space(m, 2)->size(), 12u);
  EXPECT_TRUE(same_space(path_space(m, 0), m.base_space(0)) ||
              path_space(m, 0)->size() == m.base_space(0)->size());
  EXPECT_THROW(path_space(m, 3), InvalidArgument);
  auto toy = toy_fk_model(0.3, {1, 2, 3});
  EXPECT_EQ(path_space(toy, 2)->size(), 8u);
}

TEST(FkModel, RejectsBadPotentials) {
  auto s = FiniteSpace::make("B", 2);
  auto init = Measure::uniform(s);
  auto m0 = IntegralOperator::rank_one(s, init);
  auto l1 = IntegralOperator::rank_one(s, init);
  EXPECT_THROW(FKModel({s, s}, init, m0, {l1}, {TestFunction(s, Eigen::Vector2d(0.0, 1.0))}),
               InvalidArgument);
  EXPECT_THROW(FKModel({s, s}, init, m0, {l1}, {TestFunction(s, Eigen::Vector2d(0.5, 1.5))}),
               InvalidArgument);
}

TEST(FkModel, ExactPathMeasureByEnumeration) {
  std::mt19937_64 rng(2);
  auto m = random_fk({2, 3, 2}, rng);
  auto pi = exact_path_measure(m, 2);
  double z = 0.0;
  std::vector<double> w;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 2; ++c) {
        w.push_back(path_weight(m, {a, b, c}));
        z += w.back();
      }
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(pi(i), w[i] / z, 1e-14);
}

TEST(FkModel, UnitPotentialsGiveMarkovPathLaw) {
  std::mt19937_64 rng(3);
  auto m = random_fk({2, 2, 2}, rng, 1.0, true);
  auto pi = exact_path_measure(m, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    const std::size_t a = i >> 2, b = (i >> 1) & 1, c = i & 1;
    EXPECT_NEAR(pi(i), m.initial()(a) * m.transition(1)(a, b) * m.transition(2)(b, c), 1e-14);
  }
}

TEST(FkModel, ToyMarginals) {
  for (double p : {0.2, 0.37, 0.8}) {
    const std::vector<double> betas{0.5, 1.0, 2.0, 2.5};
    auto m = toy_fk_model(p, betas);
    for (std::size_t l = 0; l < betas.size(); ++l) {
      auto pi = exact_path_measure(m, l);
      double m1 = 0.0;
      for (std::size_t x = 0; x < pi.size(); ++x) m1 += m.terminal(l, x) == 0 ? pi(x) : 0.0;
      const double a = std::pow(p, betas[l]), b = std::pow(1 - p, betas[l]);
      EXPECT_NEAR(m1, a / (a + b), 1e-13);
    }
  }
  auto closed = toy_closed_form(0.2, {1.0, 2.0});
  EXPECT_NEAR(closed[0].pi1, 0.2, 1e-15);
  EXPECT_NEAR(closed[1].pi1, 0.04 / 0.68, 1e-15);
  for (const auto& lv : toy_closed_form(0.5, {1.0, 2.0, 3.0})) EXPECT_DOUBLE_EQ(lv.pi1, 0.5);
}

TEST(FkModel, BoltzmannGibbsAndTransport) {
  auto s = FiniteSpace::make("B", 2);
  auto mu = Measure::uniform(s);
  TestFunction g(s, Eigen::Vector2d(1.0, 0.5));
  auto psi = boltzmann_gibbs(mu, g);
  EXPECT_NEAR(psi(0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(psi(1), 1.0 / 3, 1e-15);
  auto sk = transport_kernel(mu, g);
  EXPECT_NEAR(sk(1, 0), 0.5 * 2.0 / 3, 1e-15);
  EXPECT_NEAR(sk(1, 1), 0.5 + 0.5 / 3, 1e-15);
  EXPECT_NEAR(max_abs_diff(transport_kernel(mu, TestFunction::constant(s, 1.0)),
                           IntegralOperator::identity(s)),
              0.0, 1e-15);
  EXPECT_THROW(transport_kernel(mu, TestFunction(s, Eigen::Vector2d(1.2, 0.5))), InvalidArgument);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  auto s5 = FiniteSpace::make("B5", 5);
  for (int t = 0; t < 50; ++t) {
    auto nu = testutil::random_probability(s5, rng);
    Eigen::VectorXd gv(5);
    for (auto& x : gv) x = u(rng);
    TestFunction gf(s5, gv);
    auto p = boltzmann_gibbs(nu, gf);
    EXPECT_LE(max_abs_diff(act_measure(nu, transport_kernel(nu, gf)), p), 1e-12);
    for (std::size_t x = 0; x < 5; ++x) {
      EXPECT_NEAR(integrate(nu, gf) * p(x), gv(static_cast<Eigen::Index>(x)) * nu(x), 1e-14);
    }
  }
}

TEST(FkModel, FixedPointChain) {
  std::mt19937_64 rng(5);
  auto m = random_fk({2, 3, 2, 3}, rng);
  for (std::size_t l = 0; l < m.levels(); ++l) {
    EXPECT_LE(tv_norm(fk_map(m, l, exact_path_measure(m, l)) - exact_path_measure(m, l + 1)),
              1e-12);
  }
  EXPECT_THROW(fk_map(m, m.levels(), exact_path_measure(m, m.levels())), InvalidArgument);
}

TEST(FkModel, FkMapPrefixIsBoltzmannGibbs) {
  std::mt19937_64 rng(6);
  auto m = random_fk({3, 2, 2}, rng);
  auto mu = testutil::random_probability(m.path_space(1), rng);
  auto out = fk_map(m, 1, mu);
  auto psi = boltzmann_gibbs(mu, path_potential(m, 1));
  for (std::size_t x = 0; x < mu.size(); ++x) {
    double prefix_mass = 0.0;
    for (std::size_t y = 0; y < 2; ++y) prefix_mass += out(m.extend(1, x, y));
    EXPECT_NEAR(prefix_mass, psi(x), 1e-14);
  }
  auto unit = random_fk({3, 2}, rng, 1.0, true);
  auto nu = testutil::random_probability(unit.path_space(0), rng);
  auto ext = fk_map(unit, 0, nu);
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      EXPECT_NEAR(ext(unit.extend(0, x, y)), nu(x) * unit.transition(1)(x, y), 1e-15);
}

TEST(FkModel, MhKernelInvariance) {
  std::mt19937_64 rng(7);
  auto m = random_fk({2, 3, 2}, rng);
  EXPECT_THROW(mh_kernel(m, 0, m.initial()), InvalidArgument);
  for (std::size_t l = 1; l <= m.levels(); ++l) {
    for (int t = 0; t < 50; ++t) {
      auto mu = testutil::random_probability(m.path_space(l - 1), rng);
      auto k = mh_kernel(m, l, mu);
      EXPECT_TRUE(k.is_markov());
      EXPECT_LE((k.matrix().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
      auto target = fk_map(m, l - 1, mu);
      EXPECT_LE(max_abs_diff(act_measure(target, k), target), 1e-12);
    }
  }
}

TEST(FkModel, MhKernelConstantPotentialIsRankOne) {
  std::mt19937_64 rng(8);
  auto m = random_fk({2, 3}, rng, 1.0, true);
  auto mu = testutil::random_probability(m.path_space(0), rng);
  auto k = mh_kernel(m, 1, mu);
  for (std::size_t x = 0; x < 6; ++x)
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 3; ++b)
        EXPECT_NEAR(k(x, a * 3 + b), mu(a) * m.transition(1)(a, b), 1e-15);
}

TEST(FkModel, ToyMhKernelContracts) {
  auto m = toy_fk_model(0.25, {0.5, 1.0, 1.5, 2.0});
  std::mt19937_64 rng(9);
  for (std::size_t l = 1; l <= m.levels(); ++l) {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto k = mh_kernel(m, l, testutil::random_probability(m.path_space(l - 1), rng));
      worst = std::max(worst, dobrushin(power(k, 8)));
    }
    EXPECT_LT(worst, 1.0) << "level " << l;
  }
}

TEST(FkModel, FirstOrderUnitPotentialIsExtension) {
  std::mt19937_64 rng(10);
  auto m = random_fk({2, 3}, rng, 1.0, true);
  auto d = first_order_D(m, 0, m.initial());
  EXPECT_LE(max_abs_diff(d, path_transition(m, 1)), 1e-15);
}

TEST(FkModel, ToyClosedFormAgreement) {
  for (double p : {0.2, 0.25, 0.5, 0.8}) {
    const std::vector<double> betas{0.5, 1.0, 1.5, 2.0};
    auto m = toy_fk_model(p, betas);
    auto closed = toy_closed_form(p, betas);
    for (std::size_t l = 0; l <= m.levels(); ++l) {
      auto pi = exact_path_measure(m, l);
      EXPECT_LE((pi.weights() - closed[l].path_measure).cwiseAbs().maxCoeff(), 1e-12);
      if (l > 0) {
        auto d = first_order_D(m, l - 1, exact_path_measure(m, l - 1));
        EXPECT_LE((d.matrix() - closed[l].d).cwiseAbs().maxCoeff(), 1e-12);
        auto k = mh_kernel(m, l, exact_path_measure(m, l - 1));
        EXPECT_LE((k.matrix() - closed[l].kernel).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(FkModelProperty, QuadraticRemainder) {
  std::mt19937_64 rng(11);
  auto m = random_fk({2, 3, 2}, rng);
  ModelSpec spec = m;
  int good = 0, total = 0;
  for (std::size_t l = 0; l < m.levels(); ++l) {
    for (int t = 0; t < 20; ++t) {
      auto eta = testutil::random_probability(m.path_space(l), rng, 0.05);
      auto mu = testutil::random_probability(m.path_space(l), rng, 0.05);
      auto d = first_order_D(m, l, eta);
      MeasureMap map = [&](const Measure& x) { return phi(spec, l + 1, x); };
      bool ok = true;
      for (double s : {1e-2, 5e-3, 2.5e-3}) {
        const double r = remainder_ratio(map, d, eta, mu, s);
        ok = ok && r >= 3.5 && r <= 4.5;
      }
      good += ok;
      ++total;
    }
  }
  EXPECT_GE(good, total * 95 / 100);
}
