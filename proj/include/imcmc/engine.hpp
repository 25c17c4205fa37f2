#pragma once

// The i-MCMC simulator: levels 0..L advance together, level k at step n+1
// moving with the kernel indexed by the occupation measure of level k-1 over
// its states 0..n.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "imcmc/measure.hpp"
#include "imcmc/model.hpp"
#include "imcmc/rng.hpp"

namespace imcmc {

/// Geometric K-step draws give up after this many steps.
inline constexpr std::size_t kMaxGeometricSteps = 10000;

struct EngineConfig {
  std::shared_ptr<const ModelSpec> model;
  std::size_t levels = 0;       ///< top level L simulated (<= model levels)
  std::size_t iterations = 1;   ///< n_max; every level records n_max + 1 states
  std::uint64_t seed = 0;
  /// nu^(l) per level; empty means uniform on every level.
  std::vector<Measure> initial_dists;
  std::uint32_t replicate = 0;
};

/// Inverse-CDF tables for the base kernels a run samples from. Built once per
/// model and shared read-only between replicates.
class Sampler {
 public:
  Sampler(std::shared_ptr<const ModelSpec> model, std::size_t levels);

  const ModelSpec& model() const noexcept { return *model_; }
  std::size_t levels() const noexcept { return levels_; }

  /// Draws from row x of a tabulated kernel.
  std::size_t draw_level0(std::size_t x, RngStream& rng) const;
  /// FK: L'_l; annealing: L_l.
  std::size_t draw_transition(std::size_t l, std::size_t x, RngStream& rng) const;
  /// Annealing: K_l.
  std::size_t draw_k(std::size_t l, std::size_t x, RngStream& rng) const;

  /// Weight of a level-l state in the occupation-measure draws of level l+1:
  /// G_l(x) (the terminal potential for FK models).
  double weight(std::size_t l, std::size_t x) const { return weights_[l][x]; }

 private:
  std::shared_ptr<const ModelSpec> model_;
  std::size_t levels_;
  std::vector<double> level0_;
  std::size_t level0_n_ = 0;
  std::vector<std::vector<double>> transition_;  // per l, row-major cumulative
  std::vector<std::size_t> transition_n_;
  std::vector<std::vector<double>> k_;
  std::size_t k_n_ = 0;
  std::vector<std::vector<double>> weights_;
};

class ChainHistory {
 public:
  ChainHistory(std::size_t levels, std::size_t reserve, const std::vector<std::size_t>& sizes);

  std::size_t levels() const noexcept { return states_.size() - 1; }
  /// Last recorded iteration n (states 0..n are stored).
  std::size_t horizon() const noexcept { return states_[0].size() - 1; }
  std::span<const std::uint32_t> states(std::size_t k) const { return states_.at(k); }
  std::uint32_t state(std::size_t k, std::size_t p) const { return states_.at(k).at(p); }
  /// Occupation counts over every recorded state of level k.
  std::span<const std::uint64_t> counts(std::size_t k) const { return counts_.at(k); }
  /// Running sums of the level-k draw weights; entry p covers states 0..p.
  std::span<const double> cumulative_weights(std::size_t k) const { return cum_.at(k); }

  void append(std::size_t k, std::uint32_t x, double weight);

 private:
  std::vector<std::vector<std::uint32_t>> states_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::vector<std::vector<double>> cum_;
};

/// Runs the chains. Throws InvalidArgument on invalid configurations.
ChainHistory run(const EngineConfig& config);
ChainHistory run(const EngineConfig& config, const Sampler& sampler);

/// Independent MH move of level k (FK models). prev holds X_0..X_n of level k-1.
std::size_t step_mh(const Sampler& s, std::size_t k, std::span<const std::uint32_t> prev,
                    std::size_t current, RngStream& rng);

/// Move of level k under M_mu(x, .) = Phi(mu) (FK `direct` kernels). prev_cum
/// holds the running G-weights of X_0..X_n of level k-1.
std::size_t step_direct(const Sampler& s, std::size_t k, std::span<const std::uint32_t> prev,
                        std::span<const double> prev_cum, RngStream& rng);

/// Mixture move eps K_k + (1 - eps) Psi_{k-1}(eta) L_k (annealing models).
std::size_t step_annealing(const Sampler& s, std::size_t k, std::span<const std::uint32_t> prev,
                           std::span<const double> prev_cum, std::size_t current,
                           RngStream& rng);

/// Index p in 0..n drawn with probability proportional to its weight, from
/// running sums cum[0..n].
std::size_t weighted_index(std::span<const double> cum, RngStream& rng);

/// One draw of K_{eps,l}(x, .): a geometric number of K_l steps with success
/// probability 1 - eps. Throws NumericalError past kMaxGeometricSteps steps.
std::size_t sample_geometric_kernel(const Sampler& s, std::size_t l, double eps, std::size_t x,
                                    RngStream& rng);

/// eta_n^(k) = (1 / (n+1)) sum_{p<=n} delta_{X_p^(k)}, recounted from the trajectory.
Measure occupation(const ChainHistory& h, const SpaceRef& space, std::size_t k, std::size_t n);

/// eta_n^(k)(f).
double occupation_integral(const ChainHistory& h, std::size_t k, std::size_t n,
                           const TestFunction& f);

/// U_n^(k)(f) = sqrt(n+1) [eta_n^(k)(f) - pi(f)].
double fluctuation_field(const ChainHistory& h, std::size_t k, std::size_t n,
                         const TestFunction& f, const Measure& pi);

/// CSV rows replicate,level,iteration,state_index (no header).
void write_trajectory_rows(std::ostream& out, const ChainHistory& h, std::uint32_t replicate);

}  // namespace imcmc
