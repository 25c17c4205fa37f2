#pragma once

// Bundled models and the closed forms of the two-state Feynman-Kac toy model.

#include <cstddef>
#include <vector>

#include "imcmc/annealing_model.hpp"
#include "imcmc/fk_model.hpp"
#include "imcmc/measure.hpp"

namespace imcmc {

/// Two-state toy model on S = {1, 2}:
///   G'_l = (p^(b_{l+1}-b_l), q^(b_{l+1}-b_l)),
///   L'_{l+1} = [[1 - pi_{l+1}(2), pi_{l+1}(2)], [pi_{l+1}(1), 1 - pi_{l+1}(1)]],
///   pi_l(1) = p^b_l / (p^b_l + q^b_l), pi^(0) = pi_0.
/// The level-0 kernel has the same shape at pi_0. levels = betas.size() - 1.
FKModel toy_fk_model(double p, const std::vector<double>& betas,
                     FkKernel kernel = FkKernel::kMetropolisHastings);

/// Homogeneous chain on |M| states as a zero-level FK model, started from
/// the invariant measure of M.
FKModel homogeneous_chain(const IntegralOperator& kernel);

/// Four-state annealing model: V = (0, 1, 2, 0.5), K_l Metropolis on a lazy
/// cycle proposal, L_l Metropolis on the uniform proposal.
AnnealingModel annealing4_model(double epsilon,
                                std::vector<double> betas = {0.5, 1.0, 1.5, 2.0});

/// Closed-form quantities of the toy model at one level.
struct ToyLevel {
  double pi1 = 0.0;                ///< pi_l(1)
  Eigen::Matrix2d transition;      ///< L'_l (level 0: the level-0 kernel)
  Eigen::Vector2d potential;       ///< G'_l (zero when l is the last level)
  Eigen::VectorXd path_measure;    ///< pi^(l) on the mixed-radix path space
  Eigen::MatrixXd d;               ///< D_l (empty at level 0)
  Eigen::MatrixXd kernel;          ///< M_{pi^(l-1)}^(l) (level 0: M^(0))
};

/// Evaluates the toy model's displayed formulas level by level. Used as an
/// independent check on the general path-space constructions.
std::vector<ToyLevel> toy_closed_form(double p, const std::vector<double>& betas);

}  // namespace imcmc
