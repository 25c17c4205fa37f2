#include "imcmc/presets.hpp"

#include <cmath>
#include <string>

#include "imcmc/error.hpp"
#include "imcmc/resolvent.hpp"

namespace imcmc {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_toy(double p, const std::vector<double>& betas) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("toy model needs p in (0, 1)");
  if (betas.empty()) throw InvalidArgument("toy model needs at least one beta");
  for (std::size_t l = 0; l < betas.size(); ++l) {
    if (!(betas[l] > 0.0)) throw InvalidArgument("toy betas must be positive");
    if (l > 0 && !(betas[l] > betas[l - 1])) {
      throw InvalidArgument("toy betas must be strictly increasing");
    }
  }
}

double toy_pi1(double p, double beta) {
  const double a = std::pow(p, beta);
  const double b = std::pow(1.0 - p, beta);
  return a / (a + b);
}

Eigen::Matrix2d toy_transition(double pi1) {
  const double pi2 = 1.0 - pi1;
  Eigen::Matrix2d m;
  m << 1.0 - pi2, pi2, pi1, 1.0 - pi1;
  return m;
}

}  // namespace

FKModel toy_fk_model(double p, const std::vector<double>& betas, FkKernel kernel) {
  check_toy(p, betas);
  const double q = 1.0 - p;
  const std::size_t L = betas.size() - 1;
  std::vector<SpaceRef> spaces;
  for (std::size_t l = 0; l <= L; ++l) {
    spaces.push_back(FiniteSpace::make("S'" + std::to_string(l), {"1", "2"}));
  }
  const double pi0 = toy_pi1(p, betas[0]);
  Measure initial = Measure::probability(spaces[0], Eigen::Vector2d(pi0, 1.0 - pi0));
  IntegralOperator m0 = IntegralOperator::markov(spaces[0], spaces[0], toy_transition(pi0));
  std::vector<IntegralOperator> transitions;
  std::vector<TestFunction> potentials;
  for (std::size_t l = 0; l < L; ++l) {
    const double db = betas[l + 1] - betas[l];
    potentials.emplace_back(spaces[l], Eigen::Vector2d(std::pow(p, db), std::pow(q, db)));
    transitions.push_back(IntegralOperator::markov(
        spaces[l], spaces[l + 1], toy_transition(toy_pi1(p, betas[l + 1]))));
  }
  return FKModel(std::move(spaces), std::move(initial), std::move(m0), std::move(transitions),
                 std::move(potentials), kernel);
}

FKModel homogeneous_chain(const IntegralOperator& kernel) {
  require_same_space(kernel.src(), kernel.dst(), "homogeneous_chain");
  Measure pi = invariant_measure(kernel);
  return FKModel({kernel.src()}, std::move(pi), kernel, {}, {});
}

AnnealingModel annealing4_model(double epsilon, std::vector<double> betas) {
  auto space = FiniteSpace::make("S4", 4);
  TestFunction energy(space, Eigen::Vector4d(0.0, 1.0, 2.0, 0.5));
  Eigen::Matrix4d cycle;
  cycle << 0.5, 0.25, 0.0, 0.25,  //
      0.25, 0.5, 0.25, 0.0,       //
      0.0, 0.25, 0.5, 0.25,       //
      0.25, 0.0, 0.25, 0.5;
  const Eigen::Matrix4d uniform = Eigen::Matrix4d::Constant(0.25);
  return AnnealingModel::with_metropolis(
      space, std::move(energy), std::move(betas), epsilon,
      IntegralOperator::markov(space, space, cycle),
      IntegralOperator::markov(space, space, uniform));
}

std::vector<ToyLevel> toy_closed_form(double p, const std::vector<double>& betas) {
  check_toy(p, betas);
  const double q = 1.0 - p;
  const std::size_t L = betas.size() - 1;
  std::vector<ToyLevel> out(L + 1);
  for (std::size_t l = 0; l <= L; ++l) {
    out[l].pi1 = toy_pi1(p, betas[l]);
    out[l].transition = toy_transition(out[l].pi1);
    if (l < L) {
      const double db = betas[l + 1] - betas[l];
      out[l].potential = Eigen::Vector2d(std::pow(p, db), std::pow(q, db));
    } else {
      out[l].potential.setZero();
    }
  }
  auto marginal = [&](std::size_t l, std::size_t s) {
    return s == 0 ? out[l].pi1 : 1.0 - out[l].pi1;
  };
  // With rank-one L', the path measure factorizes:
  // pi^(l)(x_0..x_l) = prod_{k<l} pi_{k+1}(x_k) * pi_l(x_l).
  for (std::size_t l = 0; l <= L; ++l) {
    const std::size_t n = std::size_t{1} << (l + 1);
    Eigen::VectorXd w(idx(n));
    for (std::size_t i = 0; i < n; ++i) {
      double v = 1.0;
      for (std::size_t k = 0; k <= l; ++k) {
        const std::size_t bit = (i >> (l - k)) & 1U;
        v *= k < l ? marginal(k + 1, bit) : marginal(l, bit);
      }
      w(idx(i)) = v;
    }
    out[l].path_measure = std::move(w);
  }
  // D_{l+1}(x_l, y_{l+1}) = [G'_l(x'_l) 1{y_l = x_l} L'_{l+1}(y'_l, y'_{l+1})
  //                          + (1 - G'_l(x'_l)) pi^(l+1)(y_{l+1})] / pi_l(G'_l)
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t n = std::size_t{1} << (l + 1);
    const auto& g = out[l].potential;
    const double pig = marginal(l, 0) * g(0) + marginal(l, 1) * g(1);
    const auto& lnext = out[l + 1].transition;
    const auto& pinext = out[l + 1].path_measure;
    Eigen::MatrixXd d(idx(n), idx(2 * n));
    for (std::size_t x = 0; x < n; ++x) {
      const double gx = g(idx(x & 1U));
      for (std::size_t y = 0; y < 2 * n; ++y) {
        const std::size_t yprefix = y >> 1U;
        const double diag = yprefix == x ? lnext(idx(yprefix & 1U), idx(y & 1U)) : 0.0;
        d(idx(x), idx(y)) = (gx * diag + (1.0 - gx) * pinext(idx(y))) / pig;
      }
    }
    out[l + 1].d = std::move(d);
  }
  // M_{pi^(l-1)}^(l)(x_l, y_l) = pi^(l-1)(y_{l-1}) L'_l(y'_{l-1}, y'_l) a(x, y)
  //                              + (1 - sum_y ...) 1{y = x},
  // a(x, y) = 1 ^ G'_{l-1}(y'_{l-1}) / G'_{l-1}(x'_{l-1}).
  out[0].kernel = out[0].transition;
  for (std::size_t l = 1; l <= L; ++l) {
    const std::size_t n = std::size_t{1} << (l + 1);
    const auto& g = out[l - 1].potential;
    const auto& lt = out[l].transition;
    const auto& prev = out[l - 1].path_measure;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(idx(n), idx(n));
    for (std::size_t x = 0; x < n; ++x) {
      const double gx = g(idx((x >> 1U) & 1U));
      double accepted = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        const std::size_t yprev = y >> 1U;
        const double a = std::min(1.0, g(idx(yprev & 1U)) / gx);
        const double v = prev(idx(yprev)) * lt(idx(yprev & 1U), idx(y & 1U)) * a;
        m(idx(x), idx(y)) += v;
        accepted += v;
      }
      m(idx(x), idx(x)) += 1.0 - accepted;
    }
    out[l].kernel = std::move(m);
  }
  return out;
}

}  // namespace imcmc
