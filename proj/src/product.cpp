#include "imcmc/product.hpp"

#include <string>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<std::size_t> level_sizes(const CltSpec& spec, std::size_t l) {
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k <= l; ++k) sizes.push_back(spec.level(k).space->size());
  return sizes;
}

void require_levels(const CltSpec& spec, std::size_t top, const char* what) {
  if (top > spec.top_level()) {
    throw InvalidArgument(std::string(what) + ": needs CLT levels up to " + std::to_string(top) +
                          ", have " + std::to_string(spec.top_level()));
  }
}

}  // namespace

SpaceRef product_level_space(const CltSpec& spec, std::size_t l) {
  require_levels(spec, l, "product_level_space");
  SpaceRef s = spec.level(0).space;
  for (std::size_t k = 1; k <= l; ++k) s = product_space(s, spec.level(k).space);
  return s;
}

Measure level_marginal(const CltSpec& spec, std::size_t l, const Measure& mu, std::size_t k) {
  if (k > l) throw InvalidArgument("level_marginal: coordinate out of range");
  const auto sizes = level_sizes(spec, l);
  require_same_space(mu.space(), product_level_space(spec, l), "level_marginal");
  std::size_t below = 1;  // product of radices of coordinates after k
  for (std::size_t j = k + 1; j <= l; ++j) below *= sizes[j];
  Eigen::VectorXd w = Eigen::VectorXd::Zero(idx(sizes[k]));
  for (std::size_t i = 0; i < mu.size(); ++i) w(idx((i / below) % sizes[k])) += mu(i);
  if (mu.is_probability()) return Measure::normalized(spec.level(k).space, std::move(w));
  return Measure::signed_measure(spec.level(k).space, std::move(w));
}

Measure product_phi(const ModelSpec& model, const CltSpec& spec, std::size_t l_plus_1,
                    const Measure& mu) {
  if (l_plus_1 == 0) throw InvalidArgument("product_phi: Phi^[0] is the constant pi^(0)");
  const std::size_t l = l_plus_1 - 1;
  require_levels(spec, l_plus_1, "product_phi");
  Measure out = spec.limit(0);
  for (std::size_t k = 0; k <= l; ++k) {
    out = tensor(out, phi(model, k + 1, level_marginal(spec, l, mu, k)));
  }
  return out;
}

IntegralOperator product_first_order(const CltSpec& spec, std::size_t l) {
  require_levels(spec, l + 1, "product_first_order");
  // Start from D_[1] = pi^(0) (x) D_1, i.e. the recursion with D_[0] = 0.
  const auto& d1 = spec.d(1).matrix();
  const auto& pi0 = spec.limit(0).weights();
  Eigen::MatrixXd d(d1.rows(), pi0.size() * d1.cols());
  for (Eigen::Index u = 0; u < d1.rows(); ++u) {
    for (Eigen::Index x = 0; x < pi0.size(); ++x) {
      d.block(u, x * d1.cols(), 1, d1.cols()) = pi0(x) * d1.row(u);
    }
  }
  Eigen::VectorXd pi_prod = pi0;  // pi^[k]
  for (std::size_t k = 1; k <= l; ++k) {
    // d: S^[k-1] -> S^[k]; build S^[k] -> S^[k+1].
    const auto& dk = spec.d(k + 1).matrix();            // S^(k) -> S^(k+1)
    const auto& pik = spec.limit(k).weights();          // pi^(k)
    const auto& pinext = spec.limit(k + 1).weights();   // pi^(k+1)
    pi_prod = tensor(Measure::signed_measure(product_level_space(spec, k - 1), pi_prod),
                     Measure::signed_measure(spec.level(k).space, pik))
                  .weights();
    const Eigen::Index nu_last = dk.rows();   // |S^(k)|
    const Eigen::Index ny = dk.cols();        // |S^(k+1)|
    const Eigen::Index nu_pre = d.rows();     // |S^[k-1]|
    const Eigen::Index nx = d.cols();         // |S^[k]|
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(nu_pre * nu_last, nx * ny);
    for (Eigen::Index up = 0; up < nu_pre; ++up) {
      for (Eigen::Index ul = 0; ul < nu_last; ++ul) {
        const Eigen::Index u = up * nu_last + ul;
        for (Eigen::Index x = 0; x < nx; ++x) {
          next.block(u, x * ny, 1, ny) = pi_prod(x) * dk.row(ul) + d(up, x) * pinext.transpose();
        }
      }
    }
    d = std::move(next);
  }
  return IntegralOperator::general(product_level_space(spec, l), product_level_space(spec, l + 1),
                                   std::move(d));
}

IntegralOperator product_first_order_sum(const CltSpec& spec, std::size_t l) {
  require_levels(spec, l + 1, "product_first_order_sum");
  const auto src = product_level_space(spec, l);
  const auto dst = product_level_space(spec, l + 1);
  const auto in_sizes = level_sizes(spec, l);
  const auto out_sizes = level_sizes(spec, l + 1);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(idx(src->size()), idx(dst->size()));
  std::vector<std::size_t> u(l + 1);
  std::vector<std::size_t> y(l + 2);
  for (std::size_t ui = 0; ui < src->size(); ++ui) {
    std::size_t rest = ui;
    for (std::size_t c = l + 1; c-- > 0;) {
      u[c] = rest % in_sizes[c];
      rest /= in_sizes[c];
    }
    for (std::size_t yi = 0; yi < dst->size(); ++yi) {
      rest = yi;
      for (std::size_t c = l + 2; c-- > 0;) {
        y[c] = rest % out_sizes[c];
        rest /= out_sizes[c];
      }
      double total = 0.0;
      for (std::size_t k = 0; k <= l; ++k) {
        // pi^[0,k](y_0..y_k) D_{k+1}(u_k, y_{k+1}) pi^[k+2,l+1](y_{k+2}..)
        double v = spec.d(k + 1)(u[k], y[k + 1]);
        for (std::size_t c = 0; c <= k; ++c) v *= spec.limit(c)(y[c]);
        for (std::size_t c = k + 2; c <= l + 1; ++c) v *= spec.limit(c)(y[c]);
        total += v;
      }
      d(idx(ui), idx(yi)) = total;
    }
  }
  return IntegralOperator::general(src, dst, std::move(d));
}

ProductModel product_model(const ModelSpec& model, const CltSpec& spec, std::size_t l) {
  require_levels(spec, l + 1, "product_model");
  (void)model;
  IntegralOperator kernel = spec.bundle(0).kernel;
  Measure limit = spec.limit(0);
  for (std::size_t k = 1; k <= l; ++k) {
    kernel = tensor(kernel, spec.bundle(k).kernel);
    limit = tensor(limit, spec.limit(k));
  }
  return ProductModel{product_level_space(spec, l), std::move(kernel), std::move(limit),
                      product_first_order(spec, l)};
}

}  // namespace imcmc
