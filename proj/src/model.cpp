#include "imcmc/model.hpp"

#include <string>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_level(const ModelSpec& model, std::size_t l, const char* what) {
  if (l > model_levels(model)) {
    throw InvalidArgument(std::string(what) + ": level " + std::to_string(l) +
                          " exceeds model levels " + std::to_string(model_levels(model)));
  }
}

}  // namespace

std::size_t model_levels(const ModelSpec& model) {
  return std::visit([](const auto& m) { return m.levels(); }, model);
}

const SpaceRef& level_space(const ModelSpec& model, std::size_t l) {
  check_level(model, l, "level_space");
  return std::visit(overloaded{
                        [&](const FKModel& m) -> const SpaceRef& { return m.path_space(l); },
                        [](const AnnealingModel& m) -> const SpaceRef& { return m.space(); },
                    },
                    model);
}

Measure limit_measure(const ModelSpec& model, std::size_t l) {
  check_level(model, l, "limit_measure");
  return std::visit(overloaded{
                        [&](const FKModel& m) { return exact_path_measure(m, l); },
                        [&](const AnnealingModel& m) { return gibbs_measure(m, l); },
                    },
                    model);
}

const IntegralOperator& level0_kernel(const ModelSpec& model) {
  return std::visit(
      overloaded{
          [](const FKModel& m) -> const IntegralOperator& { return m.level0_kernel(); },
          [](const AnnealingModel& m) -> const IntegralOperator& { return m.k_kernel(0); },
      },
      model);
}

IntegralOperator level_kernel(const ModelSpec& model, std::size_t l, const Measure& mu) {
  if (l == 0) return level0_kernel(model);
  check_level(model, l, "level_kernel");
  return std::visit(overloaded{
                        [&](const FKModel& m) {
                          return m.kernel_kind() == FkKernel::kDirect ? direct_kernel(m, l, mu)
                                                                      : mh_kernel(m, l, mu);
                        },
                        [&](const AnnealingModel& m) { return mixture_kernel(m, l, mu); },
                    },
                    model);
}

IntegralOperator limit_kernel(const ModelSpec& model, std::size_t l) {
  if (l == 0) return level0_kernel(model);
  return level_kernel(model, l, limit_measure(model, l - 1));
}

Measure phi(const ModelSpec& model, std::size_t l, const Measure& mu) {
  if (l == 0) throw InvalidArgument("phi: Phi^(0) is the constant pi^(0)");
  check_level(model, l, "phi");
  return std::visit(overloaded{
                        [&](const FKModel& m) { return fk_map(m, l - 1, mu); },
                        [&](const AnnealingModel& m) { return annealing_map(m, l - 1, mu); },
                    },
                    model);
}

IntegralOperator first_order(const ModelSpec& model, std::size_t l, const Measure& eta) {
  if (l == 0) throw InvalidArgument("first_order: D_0 is the zero operator");
  check_level(model, l, "first_order");
  return std::visit(
      [&](const auto& m) { return first_order_D(m, l - 1, eta); }, model);
}

double first_order_remainder(const MeasureMap& map, const IntegralOperator& d, const Measure& eta,
                             const Measure& mu, double t) {
  require_same_space(eta.space(), mu.space(), "first_order_remainder");
  const Eigen::VectorXd dir = mu.weights() - eta.weights();
  const Measure mu_t = Measure::probability(eta.space(), eta.weights() + t * dir, 1e-10);
  const Measure lin = act_measure(Measure::signed_measure(eta.space(), t * dir), d);
  return tv_norm(map(mu_t) - map(eta) - lin);
}

double remainder_ratio(const MeasureMap& map, const IntegralOperator& d, const Measure& eta,
                       const Measure& mu, double t) {
  return first_order_remainder(map, d, eta, mu, t) / first_order_remainder(map, d, eta, mu, t / 2);
}

std::size_t terminal_state(const ModelSpec& model, std::size_t l, std::size_t x) {
  return std::visit(overloaded{
                        [&](const FKModel& m) { return m.terminal(l, x); },
                        [&](const AnnealingModel&) { return x; },
                    },
                    model);
}

const SpaceRef& terminal_space(const ModelSpec& model, std::size_t l) {
  if (const auto* fk = std::get_if<FKModel>(&model)) return fk->base_space(l);
  return std::get<AnnealingModel>(model).space();
}

std::size_t terminal_size(const ModelSpec& model, std::size_t l) {
  return std::visit(overloaded{
                        [&](const FKModel& m) { return m.base_space(l)->size(); },
                        [](const AnnealingModel& m) { return m.space()->size(); },
                    },
                    model);
}

}  // namespace imcmc
