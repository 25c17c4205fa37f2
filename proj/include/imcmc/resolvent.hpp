#pragma once

// Invariant measures, resolvent operators and local variances of a single
// uniformly ergodic Markov kernel on a finite space.

#include <cstddef>

#include "imcmc/measure.hpp"

namespace imcmc {

inline constexpr unsigned kMaxContractionIndex = 64;

/// Smallest n0 with beta(M^n0) < 1, m_n0 = beta(M^n0), p_n0 = 2 n0 / (1 - m_n0).
struct Contraction {
  unsigned n0 = 0;
  double m_n0 = 1.0;
  double p_n0 = 0.0;
};

/// Throws NumericalError when no n0 <= max_n contracts.
Contraction contraction_index(const IntegralOperator& m, unsigned max_n = kMaxContractionIndex);

/// Unique invariant probability of a uniformly ergodic kernel.
///
/// Solves (M^T - I) x = 0 with the normalization row, then refines once.
/// Falls back to power iteration if the solve is singular or its residual
/// exceeds 1e-12.
Measure invariant_measure(const IntegralOperator& m);

/// P = sum_n (M^n - 1 (x) pi) via the fundamental matrix (I - M + 1 (x) pi)^{-1}.
IntegralOperator resolvent(const IntegralOperator& m, const Measure& pi);

/// Truncated series for P; stops once every column of M^n varies by at most
/// tol across rows. Cross-check route.
IntegralOperator resolvent_series(const IntegralOperator& m, const Measure& pi,
                                  double tol = 1e-12, std::size_t max_terms = 1000000);

struct ResolventBundle {
  IntegralOperator kernel;
  Measure invariant;
  IntegralOperator resolvent;
  Contraction contraction;
};

/// Bundle with the invariant measure solved from the kernel.
ResolventBundle make_bundle(const IntegralOperator& m);
/// Bundle around a known invariant measure (checked to 1e-10).
ResolventBundle make_bundle(const IntegralOperator& m, const Measure& pi);

/// max(|(M - I) P - (1 (x) pi - I)|, |pi P|), entrywise.
double poisson_residual(const ResolventBundle& b);
/// max |pi M - pi|.
double invariance_residual(const ResolventBundle& b);

/// sigma^2(f) = pi[fbar^2] + 2 sum_{n>=1} pi[fbar M^n fbar], by the resolvent
/// route 2 pi[fbar P fbar] - pi[fbar^2]. The adaptive series is evaluated as
/// well and both must agree to 1e-8 (NumericalError otherwise).
double local_variance(const ResolventBundle& b, const TestFunction& f);
/// Series route alone.
double local_variance_series(const ResolventBundle& b, const TestFunction& f);

/// pi[C(f, g)] with C(f, g)(x) = sum_y M(x, y) (Pf(y) - MPf(x)) (Pg(y) - MPg(x)).
double local_covariance(const ResolventBundle& b, const TestFunction& f, const TestFunction& g);

}  // namespace imcmc
