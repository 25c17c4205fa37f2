#include "imcmc/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

Eigen::MatrixXd stationary_projector(const Measure& pi) {
  const auto n = pi.weights().size();
  return Eigen::VectorXd::Ones(n) * pi.weights().transpose();
}

void require_square_markov(const IntegralOperator& m, const char* what) {
  require_same_space(m.src(), m.dst(), what);
  if (!m.is_markov()) throw InvalidArgument(std::string(what) + ": kernel is not Markov");
}

}  // namespace

Contraction contraction_index(const IntegralOperator& m, unsigned max_n) {
  require_square_markov(m, "contraction_index");
  IntegralOperator mn = m;
  for (unsigned n = 1; n <= max_n; ++n) {
    if (n > 1) mn = compose(mn, m);
    const double b = dobrushin(mn);
    if (b < 1.0 - 1e-12) return Contraction{n, b, 2.0 * n / (1.0 - b)};
  }
  throw NumericalError("kernel on '" + m.src()->id() +
                       "' is not uniformly ergodic at oracle scale (beta(M^n) = 1 for n <= " +
                       std::to_string(max_n) + ")");
}

Measure invariant_measure(const IntegralOperator& m) {
  require_square_markov(m, "invariant_measure");
  contraction_index(m);
  const auto n = m.matrix().rows();
  Eigen::MatrixXd a = m.matrix().transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  auto residual = [&](const Eigen::VectorXd& x) {
    return (m.matrix().transpose() * x - x).cwiseAbs().maxCoeff();
  };
  if (lu.isInvertible()) {
    Eigen::VectorXd x = lu.solve(rhs);
    x += lu.solve(rhs - a * x);
    if (x.allFinite()) {
      x = x.cwiseMax(0.0);
      x /= x.sum();
      if (residual(x) <= 1e-12) return Measure::probability(m.src(), std::move(x), 1e-12);
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it < 1000000; ++it) {
    Eigen::VectorXd next = m.matrix().transpose() * x;
    next /= next.sum();
    const double delta = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (delta <= 1e-13) return Measure::probability(m.src(), std::move(x), 1e-12);
  }
  throw NumericalError("invariant measure of kernel on '" + m.src()->id() +
                       "': power iteration did not converge");
}

IntegralOperator resolvent(const IntegralOperator& m, const Measure& pi) {
  require_square_markov(m, "resolvent");
  require_same_space(m.src(), pi.space(), "resolvent");
  const auto n = m.matrix().rows();
  const Eigen::MatrixXd proj = stationary_projector(pi);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - m.matrix() + proj;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd z = lu.solve(Eigen::MatrixXd::Identity(n, n));
  if (!z.allFinite()) throw NumericalError("resolvent: fundamental matrix solve failed");
  // One step of iterative refinement on the inverse.
  z += lu.solve(Eigen::MatrixXd::Identity(n, n) - a * z);
  return IntegralOperator::general(m.src(), m.dst(), z - proj);
}

IntegralOperator resolvent_series(const IntegralOperator& m, const Measure& pi, double tol,
                                  std::size_t max_terms) {
  require_square_markov(m, "resolvent_series");
  const auto n = m.matrix().rows();
  const Eigen::MatrixXd proj = stationary_projector(pi);
  Eigen::MatrixXd mn = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = mn - proj;
  for (std::size_t k = 1; k <= max_terms; ++k) {
    mn = mn * m.matrix();
    sum += mn - proj;
    // Largest column spread of M^n: bounds |M^n - 1 (x) pi| without relying
    // on pi, whose own rounding would put a floor under the terms.
    const double spread = (mn.colwise().maxCoeff() - mn.colwise().minCoeff()).maxCoeff();
    if (spread <= tol) {
      return IntegralOperator::general(m.src(), m.dst(), std::move(sum));
    }
  }
  throw NumericalError("resolvent series did not converge in " + std::to_string(max_terms) +
                       " terms");
}

ResolventBundle make_bundle(const IntegralOperator& m) {
  Measure pi = invariant_measure(m);
  return make_bundle(m, pi);
}

ResolventBundle make_bundle(const IntegralOperator& m, const Measure& pi) {
  require_square_markov(m, "make_bundle");
  require_same_space(m.src(), pi.space(), "make_bundle");
  const double inv = max_abs_diff(act_measure(pi, m), pi);
  if (inv > 1e-10) {
    throw NumericalError("make_bundle: supplied measure is not invariant (residual " +
                         std::to_string(inv) + ")");
  }
  Contraction c = contraction_index(m);
  IntegralOperator p = resolvent(m, pi);
  return ResolventBundle{m, pi, std::move(p), c};
}

double poisson_residual(const ResolventBundle& b) {
  const auto& m = b.kernel.matrix();
  const auto& p = b.resolvent.matrix();
  const auto n = m.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd lhs = (m - id) * p;
  const Eigen::MatrixXd rhs = stationary_projector(b.invariant) - id;
  const double r1 = (lhs - rhs).cwiseAbs().maxCoeff();
  const double r2 = (p.transpose() * b.invariant.weights()).cwiseAbs().maxCoeff();
  return std::max(r1, r2);
}

double invariance_residual(const ResolventBundle& b) {
  const Eigen::VectorXd pm = b.kernel.matrix().transpose() * b.invariant.weights();
  return (pm - b.invariant.weights()).cwiseAbs().maxCoeff();
}

namespace {

Eigen::VectorXd centered(const ResolventBundle& b, const TestFunction& f) {
  require_same_space(b.kernel.src(), f.space(), "local variance");
  const double mean = integrate(b.invariant, f);
  return f.values().array() - mean;
}

}  // namespace

double local_variance_series(const ResolventBundle& b, const TestFunction& f) {
  const Eigen::VectorXd fbar = centered(b, f);
  const Eigen::VectorXd pf = b.invariant.weights().cwiseProduct(fbar);
  double total = pf.dot(fbar);
  const double scale = std::max(1.0, fbar.cwiseAbs().maxCoeff());
  Eigen::VectorXd h = fbar;
  // Each step shrinks osc(M^n fbar) geometrically (contraction_index).
  for (std::size_t n = 1; n <= 10000000; ++n) {
    h = b.kernel.matrix() * h;
    total += 2.0 * pf.dot(h);
    if (h.maxCoeff() - h.minCoeff() <= 1e-12 * scale) return total;
  }
  throw NumericalError("local variance series did not converge");
}

double local_variance(const ResolventBundle& b, const TestFunction& f) {
  const Eigen::VectorXd fbar = centered(b, f);
  const Eigen::VectorXd pf = b.invariant.weights().cwiseProduct(fbar);
  const double via_resolvent =
      2.0 * pf.dot(b.resolvent.matrix() * fbar) - pf.dot(fbar);
  const double via_series = local_variance_series(b, f);
  if (std::abs(via_resolvent - via_series) > 1e-8 * std::max(1.0, std::abs(via_series))) {
    throw NumericalError("local variance: resolvent route " + std::to_string(via_resolvent) +
                         " disagrees with series route " + std::to_string(via_series));
  }
  if (via_resolvent < -1e-10) {
    throw NumericalError("local variance is negative: " + std::to_string(via_resolvent));
  }
  return std::max(0.0, via_resolvent);
}

double local_covariance(const ResolventBundle& b, const TestFunction& f, const TestFunction& g) {
  require_same_space(b.kernel.src(), f.space(), "local_covariance");
  require_same_space(b.kernel.src(), g.space(), "local_covariance");
  const auto& m = b.kernel.matrix();
  const Eigen::VectorXd pf = b.resolvent.matrix() * f.values();
  const Eigen::VectorXd pg = b.resolvent.matrix() * g.values();
  const Eigen::VectorXd mpf = m * pf;
  const Eigen::VectorXd mpg = m * pg;
  const auto n = m.rows();
  Eigen::VectorXd c(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const Eigen::VectorXd df = pf.array() - mpf(x);
    const Eigen::VectorXd dg = pg.array() - mpg(x);
    c(x) = m.row(x).dot(df.cwiseProduct(dg));
  }
  return b.invariant.weights().dot(c);
}

}  // namespace imcmc
