#include "imcmc/fk_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<SpaceRef> build_path_spaces(const std::vector<SpaceRef>& base) {
  std::vector<SpaceRef> out;
  out.reserve(base.size());
  out.push_back(base.front());
  for (std::size_t l = 1; l < base.size(); ++l) {
    const auto& prev = out.back();
    const std::size_t n = prev->size() * base[l]->size();
    if (n > kMaxStates) {
      throw InvalidArgument("path space at level " + std::to_string(l) + " has " +
                            std::to_string(n) + " states, above the dense limit of " +
                            std::to_string(kMaxStates));
    }
    std::vector<std::string> labels;
    labels.reserve(n);
    for (const auto& lp : prev->labels()) {
      // Level-0 labels are bare state names; wrap once so paths read (a,b,c).
      const std::string head = l == 1 ? lp : lp.substr(1, lp.size() - 2);
      for (const auto& ls : base[l]->labels()) labels.push_back("(" + head + "," + ls + ")");
    }
    out.push_back(FiniteSpace::make("path" + std::to_string(l) + "[" + base.front()->id() + "]",
                                    std::move(labels)));
  }
  return out;
}

void check_level(const FKModel& model, std::size_t l, const char* what) {
  if (l > model.levels()) {
    throw InvalidArgument(std::string(what) + ": level " + std::to_string(l) +
                          " exceeds model levels " + std::to_string(model.levels()));
  }
}

}  // namespace

FKModel::FKModel(std::vector<SpaceRef> base_spaces, Measure initial,
                 IntegralOperator level0_kernel, std::vector<IntegralOperator> transitions,
                 std::vector<TestFunction> potentials, FkKernel kernel)
    : base_spaces_(std::move(base_spaces)),
      initial_(std::move(initial)),
      level0_kernel_(std::move(level0_kernel)),
      transitions_(std::move(transitions)),
      potentials_(std::move(potentials)),
      kernel_(kernel) {
  if (base_spaces_.empty()) throw InvalidArgument("FK model needs at least one base space");
  const std::size_t L = base_spaces_.size() - 1;
  if (transitions_.size() != L) {
    throw InvalidArgument("FK model with " + std::to_string(L) + " levels needs " +
                          std::to_string(L) + " transitions, got " +
                          std::to_string(transitions_.size()));
  }
  if (potentials_.size() < L || potentials_.size() > L + 1) {
    throw InvalidArgument("FK model with " + std::to_string(L) + " levels needs " +
                          std::to_string(L) + " potentials, got " +
                          std::to_string(potentials_.size()));
  }
  require_same_space(initial_.space(), base_spaces_[0], "FK initial measure");
  if (!initial_.is_probability()) throw InvalidArgument("FK initial measure must be a probability");
  require_same_space(level0_kernel_.src(), base_spaces_[0], "FK level-0 kernel");
  require_same_space(level0_kernel_.dst(), base_spaces_[0], "FK level-0 kernel");
  if (!level0_kernel_.is_markov()) throw InvalidArgument("FK level-0 kernel must be Markov");
  const double inv = max_abs_diff(act_measure(initial_, level0_kernel_), initial_);
  if (inv > 1e-10) {
    throw InvalidArgument("FK level-0 kernel does not leave the initial measure invariant "
                          "(residual " + std::to_string(inv) + ")");
  }
  for (std::size_t l = 1; l <= L; ++l) {
    const auto& t = transitions_[l - 1];
    require_same_space(t.src(), base_spaces_[l - 1], "FK transition source");
    require_same_space(t.dst(), base_spaces_[l], "FK transition target");
    if (!t.is_markov()) {
      throw InvalidArgument("FK transition L'_" + std::to_string(l) + " is not Markov");
    }
  }
  for (std::size_t l = 0; l < potentials_.size(); ++l) {
    const auto& g = potentials_[l];
    require_same_space(g.space(), base_spaces_[l], "FK potential");
    if (!(g.values().minCoeff() > 0.0) || g.values().maxCoeff() > 1.0) {
      throw InvalidArgument("FK potential G'_" + std::to_string(l) +
                            " must take values in (0, 1]");
    }
  }
  path_spaces_ = build_path_spaces(base_spaces_);
}

const IntegralOperator& FKModel::transition(std::size_t l) const {
  if (l == 0 || l > transitions_.size()) {
    throw InvalidArgument("no transition L'_" + std::to_string(l));
  }
  return transitions_[l - 1];
}

const TestFunction& FKModel::potential(std::size_t l) const {
  if (l >= potentials_.size()) throw InvalidArgument("no potential G'_" + std::to_string(l));
  return potentials_[l];
}

FKModel FKModel::with_kernel(FkKernel kernel) const {
  FKModel copy = *this;
  copy.kernel_ = kernel;
  return copy;
}

const SpaceRef& path_space(const FKModel& model, std::size_t l) {
  check_level(model, l, "path_space");
  return model.path_space(l);
}

Measure exact_path_measure(const FKModel& model, std::size_t l) {
  check_level(model, l, "exact_path_measure");
  const auto& space = model.path_space(l);
  Eigen::VectorXd w(idx(space->size()));
  std::vector<std::size_t> coord(l + 1);
  for (std::size_t i = 0; i < space->size(); ++i) {
    std::size_t rest = i;
    for (std::size_t k = l + 1; k-- > 0;) {
      const std::size_t radix = model.base_space(k)->size();
      coord[k] = rest % radix;
      rest /= radix;
    }
    double weight = model.initial()(coord[0]);
    for (std::size_t k = 1; k <= l; ++k) {
      weight *= model.transition(k)(coord[k - 1], coord[k]);
      weight *= model.potential(k - 1)(coord[k - 1]);
    }
    w(idx(i)) = weight;
  }
  if (!(w.sum() > 0.0)) throw NumericalError("zero normalizer for the path measure");
  return Measure::normalized(space, std::move(w));
}

Measure boltzmann_gibbs(const Measure& mu, const TestFunction& g) {
  require_same_space(mu.space(), g.space(), "boltzmann_gibbs");
  const double z = integrate(mu, g);
  if (!(z > 0.0)) throw InvalidArgument("Boltzmann-Gibbs transform with mu(G) = 0");
  Eigen::VectorXd w = g.values().cwiseProduct(mu.weights()) / z;
  return Measure::normalized(mu.space(), std::move(w));
}

IntegralOperator transport_kernel(const Measure& mu, const TestFunction& g) {
  require_same_space(mu.space(), g.space(), "transport_kernel");
  if (!(g.values().minCoeff() > 0.0) || g.values().maxCoeff() > 1.0) {
    throw InvalidArgument("transport kernel requires a potential with values in (0, 1]");
  }
  const Measure psi = boltzmann_gibbs(mu, g);
  const auto n = idx(mu.size());
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    s.row(x) = (1.0 - g.values()(x)) * psi.weights().transpose();
    s(x, x) += g.values()(x);
  }
  return IntegralOperator::markov(mu.space(), mu.space(), std::move(s), 1e-10);
}

TestFunction path_potential(const FKModel& model, std::size_t l) {
  const auto& space = model.path_space(l);
  const auto& g = model.potential(l);
  Eigen::VectorXd v(idx(space->size()));
  for (std::size_t i = 0; i < space->size(); ++i) v(idx(i)) = g(model.terminal(l, i));
  return TestFunction(space, std::move(v));
}

IntegralOperator path_transition(const FKModel& model, std::size_t l_plus_1) {
  if (l_plus_1 == 0) throw InvalidArgument("path transition needs l+1 >= 1");
  check_level(model, l_plus_1, "path_transition");
  const std::size_t l = l_plus_1 - 1;
  const auto& src = model.path_space(l);
  const auto& dst = model.path_space(l_plus_1);
  const auto& step = model.transition(l_plus_1);
  const std::size_t radix = model.base_space(l_plus_1)->size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(idx(src->size()), idx(dst->size()));
  for (std::size_t x = 0; x < src->size(); ++x) {
    const std::size_t t = model.terminal(l, x);
    for (std::size_t y = 0; y < radix; ++y) m(idx(x), idx(model.extend(l, x, y))) = step(t, y);
  }
  return IntegralOperator::markov(src, dst, std::move(m));
}

Measure fk_map(const FKModel& model, std::size_t l, const Measure& mu) {
  if (l >= model.levels()) {
    throw InvalidArgument("fk_map: level " + std::to_string(l) + " has no successor (levels = " +
                          std::to_string(model.levels()) + ")");
  }
  require_same_space(mu.space(), model.path_space(l), "fk_map");
  const Measure psi = boltzmann_gibbs(mu, path_potential(model, l));
  // Apply the path extension without materializing it.
  const auto& dst = model.path_space(l + 1);
  const auto& step = model.transition(l + 1);
  const std::size_t radix = model.base_space(l + 1)->size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(idx(dst->size()));
  for (std::size_t x = 0; x < mu.size(); ++x) {
    const std::size_t t = model.terminal(l, x);
    for (std::size_t y = 0; y < radix; ++y) {
      w(idx(model.extend(l, x, y))) = psi(x) * step(t, y);
    }
  }
  return Measure::normalized(dst, std::move(w));
}

IntegralOperator mh_kernel(const FKModel& model, std::size_t l, const Measure& mu) {
  if (l == 0) {
    throw InvalidArgument("mh_kernel: level 0 uses the homogeneous kernel M^(0)");
  }
  check_level(model, l, "mh_kernel");
  require_same_space(mu.space(), model.path_space(l - 1), "mh_kernel");
  const auto& space = model.path_space(l);
  const auto& step = model.transition(l);
  const auto& g = model.potential(l - 1);
  const std::size_t radix = model.base_space(l)->size();
  const auto n = idx(space->size());

  // Proposal q(y) = mu(y_{l-1}) L'_l(y'_{l-1}, y'_l), independent of x.
  Eigen::VectorXd proposal(n);
  Eigen::VectorXd g_of(n);  // G'_{l-1}(y'_{l-1}) per path y
  for (std::size_t p = 0; p < mu.size(); ++p) {
    const std::size_t t = model.terminal(l - 1, p);
    for (std::size_t y = 0; y < radix; ++y) {
      const auto j = idx(model.extend(l - 1, p, y));
      proposal(j) = mu(p) * step(t, y);
      g_of(j) = g(t);
    }
  }

  Eigen::MatrixXd m(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const double gx = g_of(x);
    // Kahan-compensated acceptance flow so the row sums to one exactly.
    double flow = 0.0;
    double comp = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      const double a = proposal(y) * std::min(1.0, g_of(y) / gx);
      m(x, y) = y == x ? 0.0 : a;
      if (y == x) continue;
      const double term = a - comp;
      const double next = flow + term;
      comp = (next - flow) - term;
      flow = next;
    }
    m(x, x) = std::max(0.0, 1.0 - flow);
  }
  return IntegralOperator::markov(space, space, std::move(m), 1e-12);
}

IntegralOperator direct_kernel(const FKModel& model, std::size_t l, const Measure& mu) {
  if (l == 0) throw InvalidArgument("direct_kernel: level 0 uses the homogeneous kernel M^(0)");
  const Measure target = fk_map(model, l - 1, mu);
  return IntegralOperator::rank_one(model.path_space(l), target);
}

IntegralOperator first_order_D(const FKModel& model, std::size_t l, const Measure& eta) {
  if (l >= model.levels()) {
    throw InvalidArgument("first_order_D: level " + std::to_string(l) + " has no successor");
  }
  require_same_space(eta.space(), model.path_space(l), "first_order_D");
  const TestFunction g = path_potential(model, l);
  const double z = integrate(eta, g);
  if (!(z > 0.0)) throw InvalidArgument("first_order_D with eta(G) = 0");
  const IntegralOperator s = transport_kernel(eta, g);
  const IntegralOperator ext = path_transition(model, l + 1);
  return IntegralOperator::general(s.src(), ext.dst(), (s.matrix() * ext.matrix()) / z);
}

}  // namespace imcmc
