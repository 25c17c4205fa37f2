#include "imcmc/clt.hpp"

#include <cmath>
#include <string>

#include "imcmc/error.hpp"

namespace imcmc {

double clt_coefficient_squared(std::size_t l) {
  // (2l)!/(l!)^2 = C(2l, l), built incrementally to stay exact in doubles.
  double c = 1.0;
  for (std::size_t i = 1; i <= l; ++i) {
    c = c * static_cast<double>(l + i) / static_cast<double>(i);
  }
  return std::round(c);
}

double clt_coefficient(std::size_t l) { return std::sqrt(clt_coefficient_squared(l)); }

double cross_coefficient(std::size_t a, std::size_t b) {
  double c = 1.0;
  for (std::size_t i = 1; i <= b; ++i) {
    c = c * static_cast<double>(a + i) / static_cast<double>(i);
  }
  return std::round(c);
}

CltSpec::CltSpec(std::vector<CltLevel> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw InvalidArgument("CltSpec needs at least level 0");
  for (std::size_t l = 1; l < levels_.size(); ++l) {
    if (!levels_[l].d) throw InvalidArgument("CltSpec: missing D at level " + std::to_string(l));
  }
}

CltSpec CltSpec::build(const ModelSpec& model, std::size_t k) {
  if (k > model_levels(model)) {
    throw InvalidArgument("CltSpec: level " + std::to_string(k) + " exceeds model levels " +
                          std::to_string(model_levels(model)));
  }
  std::vector<CltLevel> levels;
  levels.reserve(k + 1);
  for (std::size_t l = 0; l <= k; ++l) {
    Measure pi = limit_measure(model, l);
    IntegralOperator kernel =
        l == 0 ? level0_kernel(model) : level_kernel(model, l, levels[l - 1].limit);
    ResolventBundle bundle = make_bundle(kernel, pi);
    std::optional<IntegralOperator> d;
    if (l > 0) d = first_order(model, l, levels[l - 1].limit);
    levels.push_back(CltLevel{level_space(model, l), std::move(pi), std::move(bundle), std::move(d)});
  }
  return CltSpec(std::move(levels));
}

const IntegralOperator& CltSpec::d(std::size_t l) const {
  if (l == 0 || l >= levels_.size() || !levels_[l].d) {
    throw InvalidArgument("CltSpec: no D operator at level " + std::to_string(l));
  }
  return *levels_[l].d;
}

IntegralOperator d_semigroup(const CltSpec& spec, std::size_t k, std::size_t l) {
  if (l > spec.top_level()) throw InvalidArgument("d_semigroup: level out of range");
  if (k > l) return IntegralOperator::identity(spec.level(l).space);
  if (k == 0) throw InvalidArgument("d_semigroup: D_0 is not defined");
  IntegralOperator acc = spec.d(k);
  for (std::size_t i = k + 1; i <= l; ++i) acc = compose(acc, spec.d(i));
  return acc;
}

TestFunction pull_back(const CltSpec& spec, std::size_t m, std::size_t k, const TestFunction& f) {
  if (k > spec.top_level() || m > k) throw InvalidArgument("pull_back: level out of range");
  require_same_space(f.space(), spec.level(k).space, "pull_back");
  TestFunction h = f;
  for (std::size_t i = k; i > m; --i) h = apply_operator(spec.d(i), h);
  return h;
}

double level_variance(const CltSpec& spec, std::size_t m, const TestFunction& h) {
  return local_variance(spec.bundle(m), h);
}

double asymptotic_variance(const CltSpec& spec, std::size_t k, const TestFunction& f) {
  double total = 0.0;
  for (std::size_t l = 0; l <= k; ++l) {
    const std::size_t m = k - l;
    total += clt_coefficient_squared(l) * level_variance(spec, m, pull_back(spec, m, k, f));
  }
  return total;
}

namespace {

template <class Weight>
double cross_sum(const CltSpec& spec, std::size_t k, std::size_t j, const TestFunction& f,
                 const TestFunction& g, Weight weight) {
  const std::size_t lo = std::min(k, j);
  double total = 0.0;
  for (std::size_t m = 0; m <= lo; ++m) {
    const TestFunction hf = pull_back(spec, m, k, f);
    const TestFunction hg = pull_back(spec, m, j, g);
    total += weight(k - m, j - m) * local_covariance(spec.bundle(m), hf, hg);
  }
  return total;
}

}  // namespace

double asymptotic_cross_covariance(const CltSpec& spec, std::size_t k, std::size_t j,
                                   const TestFunction& f, const TestFunction& g) {
  return cross_sum(spec, k, j, f, g, cross_coefficient);
}

double asymptotic_cross_covariance_product_form(const CltSpec& spec, std::size_t k,
                                                std::size_t j, const TestFunction& f,
                                                const TestFunction& g) {
  return cross_sum(spec, k, j, f, g, [](std::size_t a, std::size_t b) {
    return clt_coefficient(a) * clt_coefficient(b);
  });
}

}  // namespace imcmc
