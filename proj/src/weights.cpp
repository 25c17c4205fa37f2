#include "imcmc/weights.hpp"

#include <cmath>

#include "imcmc/clt.hpp"
#include "imcmc/error.hpp"

namespace imcmc {

WeightArray s_weights(std::size_t k, std::size_t n) {
  if (k == 0) throw InvalidArgument("s_weights: order k must be >= 1");
  WeightArray a;
  a.k = k;
  a.n = n;
  a.s.assign(n + 1, 1.0);
  std::vector<double> next(n + 1);
  for (std::size_t order = 1; order < k; ++order) {
    double tail = 0.0;
    for (std::size_t q = n + 1; q-- > 0;) {
      tail += a.s[q] / static_cast<double>(q + 1);
      next[q] = tail;
    }
    a.s.swap(next);
  }
  double norm2 = 0.0;
  for (double v : a.s) norm2 += v * v;
  const double inv = 1.0 / std::sqrt(norm2);
  a.w.resize(n + 1);
  for (std::size_t p = 0; p <= n; ++p) a.w[p] = a.s[p] * inv;
  return a;
}

double weight_limit_check(std::size_t k, std::size_t n) {
  if (n == 0) throw InvalidArgument("weight_limit_check: horizon n must be >= 1");
  const WeightArray a = s_weights(k + 1, n);
  double sum = 0.0;
  for (double v : a.s) sum += v * v;
  return sum / static_cast<double>(n);
}

double weight_limit(std::size_t k) { return clt_coefficient_squared(k); }

}  // namespace imcmc
