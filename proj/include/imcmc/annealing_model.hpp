#pragma once

// Interacting annealing models: a common finite space S carrying the Gibbs
// measures pi^(l) proportional to exp(-beta_l V) lambda.

#include <cstddef>
#include <optional>
#include <vector>

#include "imcmc/measure.hpp"

namespace imcmc {

class AnnealingModel {
 public:
  /// k_kernels and l_kernels are indexed by level 0..L (L = betas.size() - 1)
  /// and must each leave the level's Gibbs measure invariant to 1e-10.
  /// L_0 is never used by the chain but is still validated.
  AnnealingModel(SpaceRef space, TestFunction energy, std::vector<double> betas,
                 double epsilon, std::vector<IntegralOperator> k_kernels,
                 std::vector<IntegralOperator> l_kernels,
                 std::optional<Measure> reference = std::nullopt);

  /// Builds K_l and L_l as Metropolis kernels of the given symmetric proposals.
  static AnnealingModel with_metropolis(SpaceRef space, TestFunction energy,
                                        std::vector<double> betas, double epsilon,
                                        const IntegralOperator& proposal_k,
                                        const IntegralOperator& proposal_l,
                                        std::optional<Measure> reference = std::nullopt);

  std::size_t levels() const noexcept { return betas_.size() - 1; }
  const SpaceRef& space() const noexcept { return space_; }
  const TestFunction& energy() const noexcept { return energy_; }
  const std::vector<double>& betas() const noexcept { return betas_; }
  double beta(std::size_t l) const { return betas_.at(l); }
  double epsilon() const noexcept { return epsilon_; }
  const Measure& reference() const noexcept { return reference_; }
  const IntegralOperator& k_kernel(std::size_t l) const { return k_kernels_.at(l); }
  const IntegralOperator& l_kernel(std::size_t l) const { return l_kernels_.at(l); }

 private:
  SpaceRef space_;
  TestFunction energy_;
  std::vector<double> betas_;
  double epsilon_;
  std::vector<IntegralOperator> k_kernels_;
  std::vector<IntegralOperator> l_kernels_;
  Measure reference_;
};

/// exp(-beta V) lambda, normalized with a max-shifted exponent.
Measure gibbs(const TestFunction& energy, double beta, const Measure& reference);

Measure gibbs_measure(const AnnealingModel& model, std::size_t l);

/// Metropolis kernel for `target` built from a symmetric Markov proposal.
/// Throws InvalidArgument when the proposal is not symmetric.
IntegralOperator metropolis_kernel(const Measure& target, const IntegralOperator& proposal);

/// metropolis_kernel(gibbs_measure(model, l), proposal).
IntegralOperator default_metropolis(const AnnealingModel& model, std::size_t l,
                                    const IntegralOperator& proposal);

/// K_{eps,l} = (1 - eps) (I - eps K_l)^{-1}.
IntegralOperator geometric_kernel(const AnnealingModel& model, std::size_t l);
/// (1 - eps) sum_{k <= terms} eps^k K_l^k; cross-check for geometric_kernel.
IntegralOperator geometric_kernel_series(const AnnealingModel& model, std::size_t l,
                                         unsigned terms);

/// G_l(x) = exp(-(beta_{l+1} - beta_l)(V(x) - min V)). The shift by min V
/// scales G_l into (0, 1] and leaves Psi_l unchanged.
TestFunction annealing_potential(const AnnealingModel& model, std::size_t l);

/// Phi^(l+1)(mu) = Psi_l(mu) L_{l+1} K_{eps,l+1}.
Measure annealing_map(const AnnealingModel& model, std::size_t l, const Measure& mu);

/// M_mu^(l) = eps K_l + (1 - eps) 1 (x) Psi_{l-1}(mu) L_l, for l >= 1.
IntegralOperator mixture_kernel(const AnnealingModel& model, std::size_t l, const Measure& mu);

/// D_{l+1} = S_{l,eta} L_{l+1} K_{eps,l+1} / eta(G_l).
IntegralOperator first_order_D(const AnnealingModel& model, std::size_t l, const Measure& eta);

}  // namespace imcmc
