#pragma once

// Product (all-levels-at-once) view of an interacting model: the chain
// X^[l] = (X^(0), ..., X^(l)) on S^[l] = S^(0) x ... x S^(l), which is itself
// an interacting chain with limit pi^[l] = pi^(0) (x) ... (x) pi^(l).

#include <cstddef>
#include <vector>

#include "imcmc/clt.hpp"
#include "imcmc/measure.hpp"
#include "imcmc/model.hpp"

namespace imcmc {

struct ProductModel {
  SpaceRef space;            ///< S^[l]
  IntegralOperator kernel;   ///< M^[l] at pi^[l-1] (tensor of the level kernels)
  Measure limit;             ///< pi^[l]
  IntegralOperator d;        ///< D_[l+1], from S^[l] to S^[l+1]
};

/// S^[l], with level 0 as the highest digit.
SpaceRef product_level_space(const CltSpec& spec, std::size_t l);

/// Marginal of mu on S^[l] at level coordinate k.
Measure level_marginal(const CltSpec& spec, std::size_t l, const Measure& mu, std::size_t k);

/// Phi^[l+1](mu) = pi^(0) (x) Phi^(1)(mu^(0)) (x) ... (x) Phi^(l+1)(mu^(l)).
Measure product_phi(const ModelSpec& model, const CltSpec& spec, std::size_t l_plus_1,
                    const Measure& mu);

/// Builds kernel, limit and D_[l+1]. Needs spec.top_level() >= l + 1.
ProductModel product_model(const ModelSpec& model, const CltSpec& spec, std::size_t l);

/// D_[l+1] from the recursion
///   D_[l+1](u, (x, y)) = pi^[l](x) D_{l+1}(u^(l), y) + D_[l](u^[l-1], x) pi^(l+1)(y),
/// with D_[0] = 0.
IntegralOperator product_first_order(const CltSpec& spec, std::size_t l);

/// D_[l+1] from the explicit sum
///   sum_{k<=l} pi^[0,k] (x) D_{k+1} (x) pi^[k+2,l+1].
IntegralOperator product_first_order_sum(const CltSpec& spec, std::size_t l);

}  // namespace imcmc
