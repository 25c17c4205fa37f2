#pragma once

// Iterated Cesaro weight arrays
//   s_n^(1)(p) = 1,  s_n^(k+1)(p) = sum_{p<=q<=n} s_n^(k)(q) / (q+1),
// whose normalized squares converge to (2k)!/(k!)^2.

#include <cstddef>
#include <vector>

namespace imcmc {

struct WeightArray {
  std::size_t k = 1;
  std::size_t n = 0;
  std::vector<double> s;  ///< s_n^(k)(p), 0 <= p <= n
  std::vector<double> w;  ///< s / sqrt(sum s^2)
};

/// Throws InvalidArgument when k == 0.
WeightArray s_weights(std::size_t k, std::size_t n);

/// (1/n) sum_{q<=n} s_n^(k+1)(q)^2. Needs n >= 1.
double weight_limit_check(std::size_t k, std::size_t n);

/// (2k)!/(k!)^2.
double weight_limit(std::size_t k);

}  // namespace imcmc
