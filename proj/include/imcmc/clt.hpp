#pragma once

// Limiting variances of the fluctuation fields
//   U_n^(k)(f) = sqrt(n+1) [eta_n^(k)(f) - pi^(k)(f)].
//
// The limit is U^(k) = sum_{l<=k} c_l V^(k-l) D_{k-l+1,k} with independent
// centered Gaussian fields V^(m) whose covariance is the local covariance of
// the homogeneous kernel M_{pi^(m-1)}^(m), and c_l = sqrt((2l)!)/l!.

#include <cstddef>
#include <optional>
#include <vector>

#include "imcmc/measure.hpp"
#include "imcmc/model.hpp"
#include "imcmc/resolvent.hpp"

namespace imcmc {

/// c_l^2 = (2l)! / (l!)^2.
double clt_coefficient_squared(std::size_t l);
/// c_l = sqrt((2l)!) / l!.
double clt_coefficient(std::size_t l);
/// lim (1/n) sum_p s_n^(a+1)(p) s_n^(b+1)(p) = C(a+b, a); the weight of the
/// shared V^(m) term in Cov(U^(k), U^(j)) with a = k-m, b = j-m.
double cross_coefficient(std::size_t a, std::size_t b);

struct CltLevel {
  SpaceRef space;
  Measure limit;
  ResolventBundle bundle;
  /// D_l at pi^(l-1), from S^(l-1) to S^(l); empty at level 0.
  std::optional<IntegralOperator> d;
};

/// Everything needed for the variances of U^(0..k), evaluated at the limit
/// measures. Immutable once built.
class CltSpec {
 public:
  static CltSpec build(const ModelSpec& model, std::size_t k);
  /// Assemble from precomputed levels (e.g. product models).
  explicit CltSpec(std::vector<CltLevel> levels);

  std::size_t top_level() const noexcept { return levels_.size() - 1; }
  const CltLevel& level(std::size_t l) const { return levels_.at(l); }
  const Measure& limit(std::size_t l) const { return level(l).limit; }
  const ResolventBundle& bundle(std::size_t l) const { return level(l).bundle; }
  /// D_l for 1 <= l <= top_level().
  const IntegralOperator& d(std::size_t l) const;

 private:
  std::vector<CltLevel> levels_;
};

/// D_{k,l} = D_k ... D_l (from S^(k-1) to S^(l)); identity on S^(l) when k > l.
IntegralOperator d_semigroup(const CltSpec& spec, std::size_t k, std::size_t l);

/// D_{m+1,k} f as a function on S^(m) (applied right to left, no matrix products).
TestFunction pull_back(const CltSpec& spec, std::size_t m, std::size_t k, const TestFunction& f);

/// Local variance of V^(m) at h: sigma_m^2(h).
double level_variance(const CltSpec& spec, std::size_t m, const TestFunction& h);

/// Var U^(k)(f) = sum_{l<=k} c_l^2 sigma_{k-l}^2(D_{k-l+1,k} f).
double asymptotic_variance(const CltSpec& spec, std::size_t k, const TestFunction& f);

/// Cov(U^(k)(f), U^(j)(g)) = sum_{m<=min(k,j)} C(k-m+j-m, k-m)
///   pi^(m)[C^(m)(D_{m+1,k} f, D_{m+1,j} g)].
double asymptotic_cross_covariance(const CltSpec& spec, std::size_t k, std::size_t j,
                                   const TestFunction& f, const TestFunction& g);

/// Same sum with the weights c_{k-m} c_{j-m} instead of the binomial ones.
/// Reported for comparison only; it coincides with the above when k == j.
double asymptotic_cross_covariance_product_form(const CltSpec& spec, std::size_t k,
                                                std::size_t j, const TestFunction& f,
                                                const TestFunction& g);

}  // namespace imcmc
