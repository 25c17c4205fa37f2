#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imcmc/annealing_model.hpp"
#include "imcmc/error.hpp"
#include "imcmc/fk_model.hpp"
#include "imcmc/model.hpp"
#include "imcmc/presets.hpp"
#include "imcmc/resolvent.hpp"
#include "test_util.hpp"

using namespace imcmc;

namespace {

IntegralOperator uniform_proposal(const SpaceRef& s) {
  const auto n = static_cast<Eigen::Index>(s->size());
  return IntegralOperator::markov(s, s, Eigen::MatrixXd::Constant(n, n, 1.0 / double(n)));
}

}  // namespace

TEST(Annealing, GibbsMeasure) {
  auto s = FiniteSpace::make("S", 2);
  auto pi = gibbs(TestFunction(s, Eigen::Vector2d(0.0, 1.0)), 1.0, Measure::uniform(s));
  EXPECT_NEAR(pi(0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(pi(0), 0.7311, 1e-4);
  auto ref = Measure::probability(s, Eigen::Vector2d(0.3, 0.7));
  auto flat = gibbs(TestFunction::constant(s, 5.0), 3.0, ref);
  EXPECT_NEAR(flat(0), 0.3, 1e-15);
  // pi(argmin) >= 1 - delta once exp(-beta) <= delta for a unit energy gap.
  for (double delta : {1e-2, 1e-4, 1e-8}) {
    const double beta = std::log(1.0 / delta);
    auto sharp = gibbs(TestFunction(s, Eigen::Vector2d(0.0, 1.0)), beta, Measure::uniform(s));
    EXPECT_GE(sharp(0), 1.0 - delta);
  }
  auto huge = gibbs(TestFunction(s, Eigen::Vector2d(1e4, 1e4 + 1)), 1e3, Measure::uniform(s));
  EXPECT_NEAR(huge(0), 1.0, 1e-300);
}

TEST(Annealing, RejectsBadSchedules) {
  auto s = FiniteSpace::make("S", 3);
  TestFunction v(s, Eigen::Vector3d(0, 1, 2));
  auto q = uniform_proposal(s);
  EXPECT_THROW(AnnealingModel::with_metropolis(s, v, {1.0, 1.0}, 0.3, q, q), InvalidArgument);
  EXPECT_THROW(AnnealingModel::with_metropolis(s, v, {0.0, 1.0}, 0.3, q, q), InvalidArgument);
  EXPECT_THROW(AnnealingModel::with_metropolis(s, v, {1.0, 2.0}, 1.0, q, q), InvalidArgument);
  // Kernels that do not fix the Gibbs measures are refused.
  std::vector<IntegralOperator> ks{q, q};
  EXPECT_THROW(AnnealingModel(s, v, {1.0, 2.0}, 0.3, ks, ks), InvalidArgument);
}

TEST(Annealing, DefaultMetropolis) {
  auto s = FiniteSpace::make("S", 2);
  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  auto k = metropolis_kernel(Measure::probability(s, Eigen::Vector2d(0.8, 0.2)),
                             IntegralOperator::markov(s, s, swap));
  EXPECT_NEAR(k(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(k(1, 0), 1.0, 1e-15);

  std::mt19937_64 rng(3);
  auto s5 = FiniteSpace::make("S5", 5);
  for (int t = 0; t < 20; ++t) {
    auto base = testutil::random_markov(s5, rng);
    Eigen::MatrixXd sym = 0.5 * (base.matrix() + base.matrix().transpose());
    // Symmetrize then make stochastic on the diagonal.
    sym /= sym.rowwise().sum().maxCoeff();
    for (Eigen::Index i = 0; i < 5; ++i) sym(i, i) += 1.0 - sym.row(i).sum();
    auto prop = IntegralOperator::markov(s5, s5, sym, 1e-12);
    EXPECT_LE(max_abs_diff(metropolis_kernel(Measure::uniform(s5), prop), prop), 1e-15);
    auto pi = testutil::random_probability(s5, rng, 0.01);
    auto m = metropolis_kernel(pi, prop);
    for (std::size_t x = 0; x < 5; ++x)
      for (std::size_t y = 0; y < 5; ++y) EXPECT_NEAR(pi(x) * m(x, y), pi(y) * m(y, x), 1e-15);
  }
  Eigen::Matrix2d asym;
  asym << 0.5, 0.5, 0.1, 0.9;
  EXPECT_THROW(metropolis_kernel(Measure::uniform(s), IntegralOperator::markov(s, s, asym)),
               InvalidArgument);
}

TEST(Annealing, GeometricKernel) {
  for (double eps : {0.0, 0.3, 0.5, 0.7}) {
    auto m = annealing4_model(eps);
    for (std::size_t l = 0; l <= m.levels(); ++l) {
      auto k = geometric_kernel(m, l);
      EXPECT_TRUE(k.is_markov());
      auto pi = gibbs_measure(m, l);
      EXPECT_LE(max_abs_diff(act_measure(pi, k), pi), 1e-10);
      if (eps == 0.0) EXPECT_LE(max_abs_diff(k, IntegralOperator::identity(m.space())), 1e-15);
      if (eps == 0.5) EXPECT_LE(max_abs_diff(k, geometric_kernel_series(m, l, 40)), 1e-10);
    }
  }
  // Idempotent K: (1 - eps) I + eps K.
  auto s = FiniteSpace::make("S3", 3);
  TestFunction v(s, Eigen::Vector3d(0.0, 0.4, 1.0));
  const std::vector<double> betas{1.0, 2.0};
  std::vector<IntegralOperator> ks;
  for (double b : betas) ks.push_back(IntegralOperator::rank_one(s, gibbs(v, b, Measure::uniform(s))));
  AnnealingModel am(s, v, betas, 0.4, ks, ks);
  auto expect = IntegralOperator::identity(s) * 0.6 + ks[1] * 0.4;
  EXPECT_LE(max_abs_diff(geometric_kernel(am, 1), expect), 1e-14);
}

TEST(Annealing, FixedPointChain) {
  for (double eps : {0.0, 0.3, 0.7}) {
    auto m = annealing4_model(eps);
    for (std::size_t l = 0; l < m.levels(); ++l) {
      EXPECT_LE(tv_norm(annealing_map(m, l, gibbs_measure(m, l)) - gibbs_measure(m, l + 1)), 1e-10);
    }
  }
}

TEST(Annealing, MapMatchesStepwiseComposition) {
  std::mt19937_64 rng(4);
  auto m = annealing4_model(0.3);
  for (int t = 0; t < 20; ++t) {
    auto mu = testutil::random_probability(m.space(), rng);
    for (std::size_t l = 0; l < m.levels(); ++l) {
      auto step = act_measure(
          act_measure(boltzmann_gibbs(mu, annealing_potential(m, l)), m.l_kernel(l + 1)),
          geometric_kernel(m, l + 1));
      EXPECT_LE(max_abs_diff(annealing_map(m, l, mu), step), 1e-14);
      const Eigen::VectorXd g = annealing_potential(m, l).values();
      EXPECT_LE(g.maxCoeff(), 1.0);
      EXPECT_GT(g.minCoeff(), 0.0);
    }
  }
}

TEST(Annealing, FlatEnergyMapIsLinear) {
  auto s = FiniteSpace::make("S3", 3);
  auto q = uniform_proposal(s);
  auto m = AnnealingModel::with_metropolis(s, TestFunction::constant(s, 2.0), {1.0, 2.0}, 0.4, q, q);
  std::mt19937_64 rng(5);
  auto mu = testutil::random_probability(s, rng);
  auto expect = act_measure(act_measure(mu, m.l_kernel(1)), geometric_kernel(m, 1));
  EXPECT_LE(max_abs_diff(annealing_map(m, 0, mu), expect), 1e-15);
}

TEST(AnnealingProperty, MixtureKernel) {
  std::mt19937_64 rng(6);
  for (double eps : {0.0, 0.3, 0.7}) {
    auto m = annealing4_model(eps);
    for (std::size_t l = 1; l <= m.levels(); ++l) {
      for (int t = 0; t < 50; ++t) {
        auto mu = testutil::random_probability(m.space(), rng);
        auto k = mixture_kernel(m, l, mu);
        EXPECT_TRUE(k.is_markov());
        EXPECT_LE(dobrushin(k), eps + 1e-12);
        auto target = annealing_map(m, l - 1, mu);
        EXPECT_LE(max_abs_diff(act_measure(target, k), target), 1e-12);
        if (eps == 0.0) {
          auto row = act_measure(boltzmann_gibbs(mu, annealing_potential(m, l - 1)), m.l_kernel(l));
          EXPECT_LE(max_abs_diff(k, IntegralOperator::rank_one(m.space(), row)), 1e-15);
        }
        // |(M_mu - M_nu) f| <= (1 - eps) / min G * ||mu - nu|| * ||f||.
        auto nu = testutil::random_probability(m.space(), rng);
        auto f = testutil::random_function(m.space(), rng);
        const double lhs =
            apply_operator(k - mixture_kernel(m, l, nu), f).sup_norm();
        const double gmin = annealing_potential(m, l - 1).values().minCoeff();
        EXPECT_LE(lhs, (1.0 - eps) / gmin * tv_norm(mu - nu) * f.sup_norm() + 1e-12);
      }
    }
  }
  auto c = contraction_index(limit_kernel(ModelSpec(annealing4_model(0.3)), 2));
  EXPECT_EQ(c.n0, 1u);
  EXPECT_LE(c.m_n0, 0.3 + 1e-12);
}

TEST(AnnealingProperty, QuadraticRemainder) {
  std::mt19937_64 rng(7);
  ModelSpec spec = annealing4_model(0.3);
  const auto& m = std::get<AnnealingModel>(spec);
  int good = 0, total = 0;
  for (std::size_t l = 0; l < m.levels(); ++l) {
    for (int t = 0; t < 20; ++t) {
      auto eta = testutil::random_probability(m.space(), rng, 0.05);
      auto mu = testutil::random_probability(m.space(), rng, 0.05);
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
