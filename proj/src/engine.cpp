#include "imcmc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

std::vector<double> cumulative_rows(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      acc += m(r, c);
      out[i++] = acc;
    }
    out[i - 1] = 1.0;  // absorb rounding in the last bin
  }
  return out;
}

std::size_t draw_row(const std::vector<double>& table, std::size_t cols, std::size_t x,
                     RngStream& rng) {
  const double u = rng.uniform();
  const auto first = table.begin() + static_cast<std::ptrdiff_t>(x * cols);
  const auto last = first + static_cast<std::ptrdiff_t>(cols);
  auto it = std::upper_bound(first, last, u);
  if (it == last) --it;
  return static_cast<std::size_t>(it - first);
}

const FKModel& fk(const Sampler& s, const char* what) {
  const auto* m = std::get_if<FKModel>(&s.model());
  if (!m) throw InvalidArgument(std::string(what) + ": needs a Feynman-Kac model");
  return *m;
}

const AnnealingModel& annealing(const Sampler& s, const char* what) {
  const auto* m = std::get_if<AnnealingModel>(&s.model());
  if (!m) throw InvalidArgument(std::string(what) + ": needs an annealing model");
  return *m;
}

void require_history(std::span<const std::uint32_t> prev, const char* what) {
  if (prev.empty()) throw InvalidArgument(std::string(what) + ": empty lower-level history");
}

}  // namespace

Sampler::Sampler(std::shared_ptr<const ModelSpec> model, std::size_t levels)
    : model_(std::move(model)), levels_(levels) {
  if (!model_) throw InvalidArgument("Sampler: no model");
  if (levels_ > model_levels(*model_)) {
    throw InvalidArgument("engine: levels " + std::to_string(levels_) + " exceed model levels " +
                          std::to_string(model_levels(*model_)));
  }
  const auto& m0 = level0_kernel(*model_);
  level0_ = cumulative_rows(m0.matrix());
  level0_n_ = m0.dst()->size();
  transition_.resize(levels_ + 1);
  transition_n_.resize(levels_ + 1, 0);
  weights_.resize(levels_ + 1);
  if (const auto* f = std::get_if<FKModel>(model_.get())) {
    for (std::size_t l = 1; l <= levels_; ++l) {
      transition_[l] = cumulative_rows(f->transition(l).matrix());
      transition_n_[l] = f->transition(l).dst()->size();
    }
    for (std::size_t l = 0; l < levels_; ++l) {
      const auto g = path_potential(*f, l);
      weights_[l].assign(g.values().begin(), g.values().end());
    }
  } else {
    const auto& a = std::get<AnnealingModel>(*model_);
    k_.resize(levels_ + 1);
    k_n_ = a.space()->size();
    for (std::size_t l = 0; l <= levels_; ++l) {
      transition_[l] = cumulative_rows(a.l_kernel(l).matrix());
      transition_n_[l] = k_n_;
      k_[l] = cumulative_rows(a.k_kernel(l).matrix());
    }
    for (std::size_t l = 0; l < levels_; ++l) {
      const auto g = annealing_potential(a, l);
      weights_[l].assign(g.values().begin(), g.values().end());
    }
  }
}

std::size_t Sampler::draw_level0(std::size_t x, RngStream& rng) const {
  return draw_row(level0_, level0_n_, x, rng);
}

std::size_t Sampler::draw_transition(std::size_t l, std::size_t x, RngStream& rng) const {
  return draw_row(transition_.at(l), transition_n_.at(l), x, rng);
}

std::size_t Sampler::draw_k(std::size_t l, std::size_t x, RngStream& rng) const {
  return draw_row(k_.at(l), k_n_, x, rng);
}

ChainHistory::ChainHistory(std::size_t levels, std::size_t reserve,
                           const std::vector<std::size_t>& sizes)
    : states_(levels + 1), counts_(levels + 1), cum_(levels + 1) {
  for (std::size_t k = 0; k <= levels; ++k) {
    states_[k].reserve(reserve);
    cum_[k].reserve(reserve);
    counts_[k].assign(sizes.at(k), 0);
  }
}

void ChainHistory::append(std::size_t k, std::uint32_t x, double weight) {
  states_[k].push_back(x);
  ++counts_[k].at(x);
  cum_[k].push_back((cum_[k].empty() ? 0.0 : cum_[k].back()) + weight);
}

std::size_t weighted_index(std::span<const double> cum, RngStream& rng) {
  if (cum.empty() || !(cum.back() > 0.0)) {
    throw InvalidArgument("weighted_index: no positive weight");
  }
  const double u = rng.uniform() * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) --it;
  return static_cast<std::size_t>(it - cum.begin());
}

std::size_t step_mh(const Sampler& s, std::size_t k, std::span<const std::uint32_t> prev,
                    std::size_t current, RngStream& rng) {
  const auto& m = fk(s, "step_mh");
  require_history(prev, "step_mh");
  if (k == 0) throw InvalidArgument("step_mh: level 0 is the homogeneous chain");
  const std::size_t p = rng.bounded(prev.size());
  const std::size_t yprev = prev[p];
  const std::size_t yt = m.terminal(k - 1, yprev);
  const std::size_t proposal = m.extend(k - 1, yprev, s.draw_transition(k, yt, rng));
  // Accept with 1 ^ G'(y'_{k-1}) / G'(x'_{k-1}); a rejection keeps the whole path.
  const double ratio = s.weight(k - 1, yprev) / s.weight(k - 1, m.prefix(k, current));
  const double u = rng.uniform();
  return u < ratio ? proposal : current;
}

std::size_t step_direct(const Sampler& s, std::size_t k, std::span<const std::uint32_t> prev,
                        std::span<const double> prev_cum, RngStream& rng) {
  const auto& m = fk(s, "step_direct");
  require_history(prev, "step_direct");
  if (k == 0) throw InvalidArgument("step_direct: level 0 is the homogeneous chain");
  const std::size_t yprev = prev[weighted_index(prev_cum, rng)];
  return m.extend(k - 1, yprev, s.draw_transition(k, m.terminal(k - 1, yprev), rng));
}

std::size_t sample_geometric_kernel(const Sampler& s, std::size_t l, double eps, std::size_t x,
                                    RngStream& rng) {
  annealing(s, "sample_geometric_kernel");
  for (std::size_t steps = 0; rng.uniform() < eps; ++steps) {
    if (steps == kMaxGeometricSteps) {
      throw NumericalError("sample_geometric_kernel: more than " +
                           std::to_string(kMaxGeometricSteps) + " K steps");
    }
    x = s.draw_k(l, x, rng);
  }
  return x;
}

std::size_t step_annealing(const Sampler& s, std::size_t k, std::span<const std::uint32_t> prev,
                           std::span<const double> prev_cum, std::size_t current,
                           RngStream& rng) {
  const auto& a = annealing(s, "step_annealing");
  require_history(prev, "step_annealing");
  if (k == 0) throw InvalidArgument("step_annealing: level 0 is the homogeneous chain");
  if (rng.uniform() < a.epsilon()) return s.draw_k(k, current, rng);
  const std::size_t y = prev[weighted_index(prev_cum, rng)];
  return s.draw_transition(k, y, rng);
}

ChainHistory run(const EngineConfig& config) {
  if (!config.model) throw InvalidArgument("engine: no model");
  return run(config, Sampler(config.model, config.levels));
}

ChainHistory run(const EngineConfig& config, const Sampler& sampler) {
  if (config.iterations < 1) throw InvalidArgument("engine: iterations must be >= 1");
  if (config.levels != sampler.levels()) {
    throw InvalidArgument("engine: sampler built for a different number of levels");
  }
  const ModelSpec& model = sampler.model();
  const std::size_t L = config.levels;
  if (!config.initial_dists.empty() && config.initial_dists.size() != L + 1) {
    throw InvalidArgument("engine: initial_dists needs one measure per level (" +
                          std::to_string(L + 1) + ")");
  }
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> init_cdf;
  for (std::size_t k = 0; k <= L; ++k) {
    const auto& space = level_space(model, k);
    sizes.push_back(space->size());
    Eigen::VectorXd w;
    if (config.initial_dists.empty()) {
      w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space->size()),
                                    1.0 / static_cast<double>(space->size()));
    } else {
      const auto& nu = config.initial_dists[k];
      require_same_space(nu.space(), space, "engine initial_dists");
      if (!nu.is_probability()) throw InvalidArgument("engine: initial_dists must be probabilities");
      w = nu.weights();
    }
    init_cdf.push_back(cumulative_rows(w.transpose()));
  }

  const bool direct =
      std::holds_alternative<FKModel>(model) &&
      std::get<FKModel>(model).kernel_kind() == FkKernel::kDirect;
  const bool is_fk = std::holds_alternative<FKModel>(model);

  ChainHistory h(L, config.iterations + 1, sizes);
  std::vector<RngStream> streams;
  for (std::size_t k = 0; k <= L; ++k) {
    streams.emplace_back(config.seed, config.replicate, static_cast<std::uint32_t>(k));
  }
  auto weight = [&](std::size_t k, std::size_t x) { return k < L ? sampler.weight(k, x) : 0.0; };

  for (std::size_t k = 0; k <= L; ++k) {
    streams[k].seek(0);
    const std::size_t x0 = draw_row(init_cdf[k], sizes[k], 0, streams[k]);
    h.append(k, static_cast<std::uint32_t>(x0), weight(k, x0));
  }
  for (std::size_t n = 0; n < config.iterations; ++n) {
    for (std::size_t k = 0; k <= L; ++k) {
      RngStream& rng = streams[k];
      rng.seek(n + 1);
      const std::size_t cur = h.state(k, n);
      std::size_t next;
      if (k == 0) {
        next = sampler.draw_level0(cur, rng);
      } else {
        // Level k-1 already holds X_{n+1}; only X_0..X_n index the kernel.
        const auto prev = h.states(k - 1).first(n + 1);
        const auto cum = h.cumulative_weights(k - 1).first(n + 1);
        if (!is_fk) {
          next = step_annealing(sampler, k, prev, cum, cur, rng);
        } else if (direct) {
          next = step_direct(sampler, k, prev, cum, rng);
        } else {
          next = step_mh(sampler, k, prev, cur, rng);
        }
      }
      h.append(k, static_cast<std::uint32_t>(next), weight(k, next));
    }
  }
  return h;
}

Measure occupation(const ChainHistory& h, const SpaceRef& space, std::size_t k, std::size_t n) {
  if (k > h.levels() || n > h.horizon()) {
    throw InvalidArgument("occupation: (level " + std::to_string(k) + ", n " + std::to_string(n) +
                          ") outside the recorded history");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  for (std::size_t p = 0; p <= n; ++p) w(h.state(k, p)) += 1.0;
  return Measure::probability(space, w / static_cast<double>(n + 1), 1e-12);
}

double occupation_integral(const ChainHistory& h, std::size_t k, std::size_t n,
                           const TestFunction& f) {
  if (k > h.levels() || n > h.horizon()) {
    throw InvalidArgument("occupation_integral: outside the recorded history");
  }
  const auto states = h.states(k);
  double acc = 0.0;
  for (std::size_t p = 0; p <= n; ++p) acc += f(states[p]);
  return acc / static_cast<double>(n + 1);
}

double fluctuation_field(const ChainHistory& h, std::size_t k, std::size_t n,
                         const TestFunction& f, const Measure& pi) {
  require_same_space(f.space(), pi.space(), "fluctuation_field");
  return std::sqrt(static_cast<double>(n + 1)) * (occupation_integral(h, k, n, f) - integrate(pi, f));
}

void write_trajectory_rows(std::ostream& out, const ChainHistory& h, std::uint32_t replicate) {
  for (std::size_t k = 0; k <= h.levels(); ++k) {
    const auto states = h.states(k);
    for (std::size_t p = 0; p < states.size(); ++p) {
      out << replicate << ',' << k << ',' << p << ',' << states[p] << '\n';
    }
  }
}

}  // namespace imcmc
