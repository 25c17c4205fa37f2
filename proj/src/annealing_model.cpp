#include "imcmc/annealing_model.hpp"

#include <cmath>
#include <string>

#include "imcmc/error.hpp"
#include "imcmc/fk_model.hpp"

namespace imcmc {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_level(const AnnealingModel& model, std::size_t l, const char* what) {
  if (l > model.levels()) {
    throw InvalidArgument(std::string(what) + ": level " + std::to_string(l) +
                          " exceeds model levels " + std::to_string(model.levels()));
  }
}

}  // namespace

AnnealingModel::AnnealingModel(SpaceRef space, TestFunction energy, std::vector<double> betas,
                               double epsilon, std::vector<IntegralOperator> k_kernels,
                               std::vector<IntegralOperator> l_kernels,
                               std::optional<Measure> reference)
    : space_(std::move(space)),
      energy_(std::move(energy)),
      betas_(std::move(betas)),
      epsilon_(epsilon),
      k_kernels_(std::move(k_kernels)),
      l_kernels_(std::move(l_kernels)),
      reference_(reference ? std::move(*reference) : Measure::uniform(space_)) {
  require_same_space(energy_.space(), space_, "annealing energy");
  require_same_space(reference_.space(), space_, "annealing reference measure");
  if (!(reference_.weights().minCoeff() > 0.0)) {
    throw InvalidArgument("annealing reference measure must be strictly positive");
  }
  if (betas_.empty()) throw InvalidArgument("annealing model needs at least one beta");
  for (std::size_t l = 0; l < betas_.size(); ++l) {
    if (!(betas_[l] > 0.0) || !std::isfinite(betas_[l])) {
      throw InvalidArgument("betas[" + std::to_string(l) + "] must be positive and finite");
    }
    if (l > 0 && !(betas_[l] > betas_[l - 1])) {
      throw InvalidArgument("betas must be strictly increasing (betas[" + std::to_string(l) +
                            "] <= betas[" + std::to_string(l - 1) + "])");
    }
  }
  if (!(epsilon_ >= 0.0 && epsilon_ < 1.0)) {
    throw InvalidArgument("epsilon must lie in [0, 1)");
  }
  const std::size_t n_levels = betas_.size();
  if (k_kernels_.size() != n_levels || l_kernels_.size() != n_levels) {
    throw InvalidArgument("annealing model needs one K and one L kernel per level (" +
                          std::to_string(n_levels) + ")");
  }
  for (std::size_t l = 0; l < n_levels; ++l) {
    const Measure target = gibbs(energy_, betas_[l], reference_);
    for (const auto* k : {&k_kernels_[l], &l_kernels_[l]}) {
      const char* name = k == &k_kernels_[l] ? "K" : "L";
      require_same_space(k->src(), space_, "annealing kernel");
      require_same_space(k->dst(), space_, "annealing kernel");
      if (!k->is_markov()) {
        throw InvalidArgument(std::string(name) + "_" + std::to_string(l) + " is not Markov");
      }
      const double r = max_abs_diff(act_measure(target, *k), target);
      if (r > 1e-10) {
        throw InvalidArgument(std::string(name) + "_" + std::to_string(l) +
                              " does not leave the Gibbs measure invariant (residual " +
                              std::to_string(r) + ")");
      }
    }
  }
}

AnnealingModel AnnealingModel::with_metropolis(SpaceRef space, TestFunction energy,
                                               std::vector<double> betas, double epsilon,
                                               const IntegralOperator& proposal_k,
                                               const IntegralOperator& proposal_l,
                                               std::optional<Measure> reference) {
  const Measure lambda = reference ? *reference : Measure::uniform(space);
  std::vector<IntegralOperator> ks;
  std::vector<IntegralOperator> ls;
  for (double b : betas) {
    const Measure target = gibbs(energy, b, lambda);
    ks.push_back(metropolis_kernel(target, proposal_k));
    ls.push_back(metropolis_kernel(target, proposal_l));
  }
  return AnnealingModel(std::move(space), std::move(energy), std::move(betas), epsilon,
                        std::move(ks), std::move(ls), lambda);
}

Measure gibbs(const TestFunction& energy, double beta, const Measure& reference) {
  require_same_space(energy.space(), reference.space(), "gibbs");
  const Eigen::VectorXd expo = -beta * energy.values();
  const double shift = expo.maxCoeff();
  Eigen::VectorXd w = (expo.array() - shift).exp().matrix().cwiseProduct(reference.weights());
  return Measure::normalized(energy.space(), std::move(w));
}

Measure gibbs_measure(const AnnealingModel& model, std::size_t l) {
  check_level(model, l, "gibbs_measure");
  return gibbs(model.energy(), model.beta(l), model.reference());
}

IntegralOperator metropolis_kernel(const Measure& target, const IntegralOperator& proposal) {
  require_same_space(proposal.src(), target.space(), "metropolis_kernel");
  require_same_space(proposal.dst(), target.space(), "metropolis_kernel");
  if (!proposal.is_markov()) throw InvalidArgument("Metropolis proposal must be Markov");
  const auto& q = proposal.matrix();
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("Metropolis proposal must be symmetric");
  }
  const auto n = q.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    double off = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (y == x) continue;
      const double px = target.weights()(x);
      const double py = target.weights()(y);
      const double a = px > 0.0 ? std::min(1.0, py / px) : 1.0;
      m(x, y) = q(x, y) * a;
      off += m(x, y);
    }
    m(x, x) = std::max(0.0, 1.0 - off);
  }
  return IntegralOperator::markov(target.space(), target.space(), std::move(m), 1e-12);
}

IntegralOperator default_metropolis(const AnnealingModel& model, std::size_t l,
                                    const IntegralOperator& proposal) {
  return metropolis_kernel(gibbs_measure(model, l), proposal);
}

IntegralOperator geometric_kernel(const AnnealingModel& model, std::size_t l) {
  check_level(model, l, "geometric_kernel");
  const double eps = model.epsilon();
  const auto& k = model.k_kernel(l).matrix();
  const auto n = k.rows();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - eps * k;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
  if (!inv.allFinite()) throw NumericalError("geometric kernel: singular I - eps K");
  Eigen::MatrixXd g = (1.0 - eps) * inv;
  // Entries are nonnegative in exact arithmetic; clear rounding noise.
  g = g.cwiseMax(0.0);
  for (Eigen::Index x = 0; x < n; ++x) g.row(x) /= g.row(x).sum();
  return IntegralOperator::markov(model.space(), model.space(), std::move(g), 1e-10);
}

IntegralOperator geometric_kernel_series(const AnnealingModel& model, std::size_t l,
                                         unsigned terms) {
  check_level(model, l, "geometric_kernel_series");
  const double eps = model.epsilon();
  const auto& k = model.k_kernel(l).matrix();
  const auto n = k.rows();
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  double scale = 1.0;
  for (unsigned i = 1; i <= terms; ++i) {
    term = term * k;
    scale *= eps;
    sum += scale * term;
  }
  return IntegralOperator::general(model.space(), model.space(), (1.0 - eps) * sum);
}

TestFunction annealing_potential(const AnnealingModel& model, std::size_t l) {
  if (l >= model.levels()) {
    throw InvalidArgument("annealing_potential: level " + std::to_string(l) +
                          " has no successor");
  }
  const double db = model.beta(l + 1) - model.beta(l);
  const auto& v = model.energy().values();
  const double vmin = v.minCoeff();
  return TestFunction(model.space(), (-db * (v.array() - vmin)).exp().matrix());
}

Measure annealing_map(const AnnealingModel& model, std::size_t l, const Measure& mu) {
  require_same_space(mu.space(), model.space(), "annealing_map");
  const Measure psi = boltzmann_gibbs(mu, annealing_potential(model, l));
  return act_measure(act_measure(psi, model.l_kernel(l + 1)), geometric_kernel(model, l + 1));
}

IntegralOperator mixture_kernel(const AnnealingModel& model, std::size_t l, const Measure& mu) {
  if (l == 0) throw InvalidArgument("mixture_kernel: level 0 uses the homogeneous kernel K_0");
  check_level(model, l, "mixture_kernel");
  require_same_space(mu.space(), model.space(), "mixture_kernel");
  const double eps = model.epsilon();
  const Measure target =
      act_measure(boltzmann_gibbs(mu, annealing_potential(model, l - 1)), model.l_kernel(l));
  const auto n = idx(model.space()->size());
  Eigen::MatrixXd m = eps * model.k_kernel(l).matrix() +
                      (1.0 - eps) * (Eigen::VectorXd::Ones(n) * target.weights().transpose());
  return IntegralOperator::markov(model.space(), model.space(), std::move(m), 1e-10);
}

IntegralOperator first_order_D(const AnnealingModel& model, std::size_t l, const Measure& eta) {
  require_same_space(eta.space(), model.space(), "first_order_D");
  const TestFunction g = annealing_potential(model, l);
  const double z = integrate(eta, g);
  const IntegralOperator s = transport_kernel(eta, g);
  const IntegralOperator lk = compose(model.l_kernel(l + 1), geometric_kernel(model, l + 1));
  return IntegralOperator::general(model.space(), model.space(), (s.matrix() * lk.matrix()) / z);
}

}  // namespace imcmc
