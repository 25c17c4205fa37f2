#pragma once

// Feynman-Kac path-space models.
//
// Level l lives on the path space S'_0 x ... x S'_l. Path indices are mixed
// radix with x'_0 as the highest digit, so extending a path by y' maps index
// i to i * |S'_{l+1}| + y', the prefix of i is i / |S'_l| and the terminal
// coordinate is i % |S'_l|.

#include <cstddef>
#include <vector>

#include "imcmc/measure.hpp"

namespace imcmc {

/// How the level-l chain moves given the level-(l-1) occupation measure.
enum class FkKernel {
  kMetropolisHastings,  ///< independent MH with proposal mu (x) L'_l
  kDirect,              ///< M_mu(x, .) = Phi(mu), i.e. conditionally i.i.d.
};

class FKModel {
 public:
  /// base_spaces: S'_0..S'_L. transitions: L'_1..L'_L. potentials: G'_0..G'_{L-1}
  /// (a trailing G'_L is accepted and ignored by the chain). level0_kernel is
  /// the homogeneous kernel M^(0) on S'_0 and must leave `initial` invariant.
  FKModel(std::vector<SpaceRef> base_spaces, Measure initial, IntegralOperator level0_kernel,
          std::vector<IntegralOperator> transitions, std::vector<TestFunction> potentials,
          FkKernel kernel = FkKernel::kMetropolisHastings);

  std::size_t levels() const noexcept { return base_spaces_.size() - 1; }
  FkKernel kernel_kind() const noexcept { return kernel_; }

  const SpaceRef& base_space(std::size_t l) const { return base_spaces_.at(l); }
  const SpaceRef& path_space(std::size_t l) const { return path_spaces_.at(l); }
  const Measure& initial() const noexcept { return initial_; }
  const IntegralOperator& level0_kernel() const noexcept { return level0_kernel_; }
  /// L'_l for 1 <= l <= L.
  const IntegralOperator& transition(std::size_t l) const;
  /// G'_l for 0 <= l < number of potentials.
  const TestFunction& potential(std::size_t l) const;
  std::size_t potential_count() const noexcept { return potentials_.size(); }

  std::size_t terminal(std::size_t l, std::size_t path) const {
    return path % base_spaces_[l]->size();
  }
  std::size_t prefix(std::size_t l, std::size_t path) const {
    return path / base_spaces_[l]->size();
  }
  std::size_t extend(std::size_t l, std::size_t path, std::size_t next) const {
    return path * base_spaces_[l + 1]->size() + next;
  }

  /// Same model with a different kernel choice.
  FKModel with_kernel(FkKernel kernel) const;

 private:
  std::vector<SpaceRef> base_spaces_;
  std::vector<SpaceRef> path_spaces_;
  Measure initial_;
  IntegralOperator level0_kernel_;
  std::vector<IntegralOperator> transitions_;
  std::vector<TestFunction> potentials_;
  FkKernel kernel_;
};

/// Enumerated path space of level l. Throws InvalidArgument when l > L.
const SpaceRef& path_space(const FKModel& model, std::size_t l);

/// pi^(l) by direct enumeration of weighted paths (independent of fk_map).
Measure exact_path_measure(const FKModel& model, std::size_t l);

/// Psi(mu)(x) = G(x) mu(x) / mu(G).
Measure boltzmann_gibbs(const Measure& mu, const TestFunction& g);

/// S_mu(x, y) = G(x) 1{y = x} + (1 - G(x)) Psi(mu)(y). Requires G in (0, 1].
IntegralOperator transport_kernel(const Measure& mu, const TestFunction& g);

/// Path potential G_l(path) = G'_l(terminal coordinate).
TestFunction path_potential(const FKModel& model, std::size_t l);

/// Path extension L_{l+1}(x_l, (y_l, y')) = 1{y_l = x_l} L'_{l+1}(x'_l, y').
IntegralOperator path_transition(const FKModel& model, std::size_t l_plus_1);

/// Phi^(l+1)(mu) = Psi_l(mu) L_{l+1} for mu on PathSpace(l).
Measure fk_map(const FKModel& model, std::size_t l, const Measure& mu);

/// Independent Metropolis-Hastings kernel M_mu^(l) on PathSpace(l), mu on
/// PathSpace(l-1). Its invariant measure is fk_map(l-1, mu).
IntegralOperator mh_kernel(const FKModel& model, std::size_t l, const Measure& mu);

/// Rank-one kernel M_mu^(l)(x, .) = Phi^(l)(mu).
IntegralOperator direct_kernel(const FKModel& model, std::size_t l, const Measure& mu);

/// D_{l+1} = S_{l,eta} L_{l+1} / eta(G_l), from PathSpace(l) to PathSpace(l+1).
IntegralOperator first_order_D(const FKModel& model, std::size_t l, const Measure& eta);

}  // namespace imcmc
