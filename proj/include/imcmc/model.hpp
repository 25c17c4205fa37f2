#pragma once

// Uniform view of the interacting models as a stack of levels: level l has a
// state space S^(l), a limit measure pi^(l), mappings Phi^(l) and kernels
// M_mu^(l) with Phi^(l)(mu) invariant. Level 0 uses the homogeneous kernel
// M^(0) and Phi^(0)(mu) = pi^(0).

#include <cstddef>
#include <functional>
#include <variant>

#include "imcmc/annealing_model.hpp"
#include "imcmc/fk_model.hpp"
#include "imcmc/measure.hpp"

namespace imcmc {

using ModelSpec = std::variant<FKModel, AnnealingModel>;

std::size_t model_levels(const ModelSpec& model);
const SpaceRef& level_space(const ModelSpec& model, std::size_t l);

/// pi^(l), computed independently of the mappings (path enumeration or Gibbs).
Measure limit_measure(const ModelSpec& model, std::size_t l);

/// M^(0).
const IntegralOperator& level0_kernel(const ModelSpec& model);

/// M_mu^(l) for l >= 1 with mu on S^(l-1); M^(0) when l == 0.
IntegralOperator level_kernel(const ModelSpec& model, std::size_t l, const Measure& mu);

/// M_{pi^(l-1)}^(l), or M^(0) at level 0.
IntegralOperator limit_kernel(const ModelSpec& model, std::size_t l);

/// Phi^(l)(mu) for l >= 1, mu on S^(l-1).
Measure phi(const ModelSpec& model, std::size_t l, const Measure& mu);

/// First-order operator D_l of Phi^(l) at eta (l >= 1), from S^(l-1) to S^(l).
IntegralOperator first_order(const ModelSpec& model, std::size_t l, const Measure& eta);

using MeasureMap = std::function<Measure(const Measure&)>;

/// ||Phi(mu_t) - Phi(eta) - (mu_t - eta) D|| with mu_t = eta + t (mu - eta).
double first_order_remainder(const MeasureMap& map, const IntegralOperator& d, const Measure& eta,
                             const Measure& mu, double t);

/// Remainder at t over remainder at t / 2; close to 4 when the remainder is
/// quadratic.
double remainder_ratio(const MeasureMap& map, const IntegralOperator& d, const Measure& eta,
                       const Measure& mu, double t);

/// Index into the base space carried by the last coordinate of x at level l
/// (the state itself for annealing models).
std::size_t terminal_state(const ModelSpec& model, std::size_t l, std::size_t x);

/// Base space of the terminal coordinate at level l.
const SpaceRef& terminal_space(const ModelSpec& model, std::size_t l);

/// Size of the base space of the terminal coordinate at level l.
std::size_t terminal_size(const ModelSpec& model, std::size_t l);

}  // namespace imcmc
