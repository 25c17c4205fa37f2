#include "imcmc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite value");
}

}  // namespace

// ---------------------------------------------------------------------------
// FiniteSpace

SpaceRef FiniteSpace::make(std::string id, std::vector<std::string> labels) {
  if (labels.empty()) throw InvalidArgument("space '" + id + "' has no states");
  if (labels.size() > kMaxStates) {
    throw InvalidArgument("space '" + id + "' has " + std::to_string(labels.size()) +
                          " states, above the dense limit of " +
                          std::to_string(kMaxStates));
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      throw InvalidArgument("space '" + id + "' has duplicate label '" + l + "'");
    }
  }
  return SpaceRef(new FiniteSpace(std::move(id), std::move(labels)));
}

SpaceRef FiniteSpace::make(std::string id, std::size_t size) {
  std::vector<std::string> labels;
  labels.reserve(size);
  for (std::size_t i = 0; i < size; ++i) labels.push_back(std::to_string(i + 1));
  return make(std::move(id), std::move(labels));
}

bool same_space(const SpaceRef& a, const SpaceRef& b) noexcept {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->size() == b->size() && a->id() == b->id();
}

void require_same_space(const SpaceRef& a, const SpaceRef& b, const char* context) {
  if (!same_space(a, b)) {
    throw SpaceMismatch(context, a ? a->id() : "<null>", b ? b->id() : "<null>");
  }
}

SpaceRef product_space(const SpaceRef& a, const SpaceRef& b) {
  const std::size_t n = a->size() * b->size();
  if (n > kMaxStates) {
    throw InvalidArgument("product of '" + a->id() + "' and '" + b->id() + "' has " +
                          std::to_string(n) + " states, above the dense limit of " +
                          std::to_string(kMaxStates));
  }
  std::vector<std::string> labels;
  labels.reserve(n);
  for (const auto& la : a->labels()) {
    for (const auto& lb : b->labels()) labels.push_back(la + "|" + lb);
  }
  return FiniteSpace::make("(" + a->id() + ")x(" + b->id() + ")", std::move(labels));
}

// ---------------------------------------------------------------------------
// TestFunction

TestFunction::TestFunction(SpaceRef space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw InvalidArgument("test function without a space");
  if (static_cast<std::size_t>(values_.size()) != space_->size()) {
    throw InvalidArgument("test function on '" + space_->id() + "' has " +
                          std::to_string(values_.size()) + " values, expected " +
                          std::to_string(space_->size()));
  }
  check_finite(values_, "test function");
}

TestFunction TestFunction::constant(SpaceRef space, double c) {
  const auto n = idx(space->size());
  return TestFunction(std::move(space), Eigen::VectorXd::Constant(n, c));
}

TestFunction TestFunction::indicator(SpaceRef space, std::size_t state) {
  if (state >= space->size()) throw InvalidArgument("indicator state out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(idx(space->size()));
  v(idx(state)) = 1.0;
  return TestFunction(std::move(space), std::move(v));
}

double TestFunction::sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

TestFunction TestFunction::operator+(const TestFunction& o) const {
  require_same_space(space_, o.space_, "function sum");
  return TestFunction(space_, values_ + o.values_);
}

TestFunction TestFunction::operator-(const TestFunction& o) const {
  require_same_space(space_, o.space_, "function difference");
  return TestFunction(space_, values_ - o.values_);
}

TestFunction TestFunction::operator*(double a) const { return TestFunction(space_, values_ * a); }

TestFunction TestFunction::times(const TestFunction& o) const {
  require_same_space(space_, o.space_, "function product");
  return TestFunction(space_, values_.cwiseProduct(o.values_));
}

// ---------------------------------------------------------------------------
// Measure

Measure Measure::probability(SpaceRef space, Eigen::VectorXd weights, double tol) {
  if (!space) throw InvalidArgument("measure without a space");
  if (static_cast<std::size_t>(weights.size()) != space->size()) {
    throw InvalidArgument("measure on '" + space->id() + "' has " +
                          std::to_string(weights.size()) + " weights, expected " +
                          std::to_string(space->size()));
  }
  check_finite(weights, "probability measure");
  if (weights.minCoeff() < 0.0) {
    throw InvalidArgument("probability measure on '" + space->id() +
                          "' has a negative weight");
  }
  if (std::abs(weights.sum() - 1.0) > tol) {
    throw InvalidArgument("probability measure on '" + space->id() + "' has mass " +
                          std::to_string(weights.sum()));
  }
  return Measure(std::move(space), std::move(weights), Kind::kProbability);
}

Measure Measure::signed_measure(SpaceRef space, Eigen::VectorXd weights) {
  if (!space) throw InvalidArgument("measure without a space");
  if (static_cast<std::size_t>(weights.size()) != space->size()) {
    throw InvalidArgument("measure on '" + space->id() + "' has wrong length");
  }
  check_finite(weights, "signed measure");
  return Measure(std::move(space), std::move(weights), Kind::kSigned);
}

Measure Measure::dirac(SpaceRef space, std::size_t state) {
  if (state >= space->size()) throw InvalidArgument("Dirac state out of range");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(idx(space->size()));
  w(idx(state)) = 1.0;
  return Measure(std::move(space), std::move(w), Kind::kProbability);
}

Measure Measure::uniform(SpaceRef space) {
  const auto n = idx(space->size());
  return Measure(std::move(space), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)),
                 Kind::kProbability);
}

Measure Measure::normalized(SpaceRef space, Eigen::VectorXd weights) {
  if (static_cast<std::size_t>(weights.size()) != space->size()) {
    throw InvalidArgument("measure on '" + space->id() + "' has wrong length");
  }
  check_finite(weights, "measure");
  if (weights.minCoeff() < 0.0) throw InvalidArgument("negative weight in normalization");
  const double total = weights.sum();
  if (!(total > 0.0)) throw InvalidArgument("zero normalizer on '" + space->id() + "'");
  weights /= total;
  return Measure(std::move(space), std::move(weights), Kind::kProbability);
}

Measure Measure::operator+(const Measure& o) const {
  require_same_space(space_, o.space_, "measure sum");
  return Measure(space_, weights_ + o.weights_, Kind::kSigned);
}

Measure Measure::operator-(const Measure& o) const {
  require_same_space(space_, o.space_, "measure difference");
  return Measure(space_, weights_ - o.weights_, Kind::kSigned);
}

Measure Measure::operator*(double a) const { return Measure(space_, weights_ * a, Kind::kSigned); }

// ---------------------------------------------------------------------------
// IntegralOperator

IntegralOperator IntegralOperator::markov(SpaceRef src, SpaceRef dst, Eigen::MatrixXd matrix,
                                          double tol) {
  if (static_cast<std::size_t>(matrix.rows()) != src->size() ||
      static_cast<std::size_t>(matrix.cols()) != dst->size()) {
    throw InvalidArgument("kernel shape does not match '" + src->id() + "' -> '" +
                          dst->id() + "'");
  }
  if (!matrix.allFinite()) throw InvalidArgument("kernel has non-finite entries");
  for (Eigen::Index x = 0; x < matrix.rows(); ++x) {
    if (matrix.row(x).minCoeff() < 0.0) {
      throw InvalidArgument("kernel row " + std::to_string(x) + " has a negative entry");
    }
    const double s = matrix.row(x).sum();
    if (std::abs(s - 1.0) > tol) {
      throw InvalidArgument("kernel row " + std::to_string(x) + " sums to " +
                            std::to_string(s));
    }
  }
  return IntegralOperator(std::move(src), std::move(dst), std::move(matrix), true);
}

IntegralOperator IntegralOperator::general(SpaceRef src, SpaceRef dst, Eigen::MatrixXd matrix) {
  if (static_cast<std::size_t>(matrix.rows()) != src->size() ||
      static_cast<std::size_t>(matrix.cols()) != dst->size()) {
    throw InvalidArgument("operator shape does not match '" + src->id() + "' -> '" +
                          dst->id() + "'");
  }
  if (!matrix.allFinite()) throw InvalidArgument("operator has non-finite entries");
  return IntegralOperator(std::move(src), std::move(dst), std::move(matrix), false);
}

IntegralOperator IntegralOperator::identity(SpaceRef space) {
  const auto n = idx(space->size());
  return IntegralOperator(space, space, Eigen::MatrixXd::Identity(n, n), true);
}

IntegralOperator IntegralOperator::rank_one(SpaceRef src, const Measure& mu) {
  const auto n = idx(src->size());
  Eigen::MatrixXd m = Eigen::VectorXd::Ones(n) * mu.weights().transpose();
  return IntegralOperator(std::move(src), mu.space(), std::move(m), mu.is_probability());
}

double IntegralOperator::sup_norm() const {
  return matrix_.cwiseAbs().rowwise().sum().maxCoeff();
}

IntegralOperator IntegralOperator::operator+(const IntegralOperator& o) const {
  require_same_space(src_, o.src_, "operator sum (source)");
  require_same_space(dst_, o.dst_, "operator sum (target)");
  return IntegralOperator(src_, dst_, matrix_ + o.matrix_, false);
}

IntegralOperator IntegralOperator::operator-(const IntegralOperator& o) const {
  require_same_space(src_, o.src_, "operator difference (source)");
  require_same_space(dst_, o.dst_, "operator difference (target)");
  return IntegralOperator(src_, dst_, matrix_ - o.matrix_, false);
}

IntegralOperator IntegralOperator::operator*(double a) const {
  return IntegralOperator(src_, dst_, matrix_ * a, false);
}

// ---------------------------------------------------------------------------
// Algebra

TestFunction apply_operator(const IntegralOperator& m, const TestFunction& f) {
  require_same_space(m.dst(), f.space(), "apply_operator");
  return TestFunction(m.src(), m.matrix() * f.values());
}

Measure act_measure(const Measure& mu, const IntegralOperator& m) {
  require_same_space(mu.space(), m.src(), "act_measure");
  Eigen::VectorXd w = m.matrix().transpose() * mu.weights();
  if (mu.is_probability() && m.is_markov()) {
    // Clip rounding noise so the result passes probability validation.
    w = w.cwiseMax(0.0);
    w /= w.sum();
    return Measure::probability(m.dst(), std::move(w), 1e-9);
  }
  return Measure::signed_measure(m.dst(), std::move(w));
}

double integrate(const Measure& mu, const TestFunction& f) {
  require_same_space(mu.space(), f.space(), "integrate");
  return mu.weights().dot(f.values());
}

double tv_norm(const Measure& mu) { return mu.weights().cwiseAbs().sum(); }

double oscillation(const TestFunction& f) {
  return f.values().maxCoeff() - f.values().minCoeff();
}

double dobrushin(const IntegralOperator& m) {
  if (!m.is_markov()) {
    throw InvalidArgument("Dobrushin coefficient requested for a non-Markov operator on '" +
                          m.src()->id() + "'");
  }
  const auto& a = m.matrix();
  double best = 0.0;
  for (Eigen::Index x = 0; x < a.rows(); ++x) {
    for (Eigen::Index y = x + 1; y < a.rows(); ++y) {
      best = std::max(best, 0.5 * (a.row(x) - a.row(y)).cwiseAbs().sum());
    }
  }
  return std::min(best, 1.0);
}

IntegralOperator compose(const IntegralOperator& m, const IntegralOperator& n) {
  require_same_space(m.dst(), n.src(), "compose");
  Eigen::MatrixXd p = m.matrix() * n.matrix();
  if (m.is_markov() && n.is_markov()) {
    return IntegralOperator::markov(m.src(), n.dst(), std::move(p), 1e-9);
  }
  return IntegralOperator::general(m.src(), n.dst(), std::move(p));
}

IntegralOperator power(const IntegralOperator& m, unsigned k) {
  require_same_space(m.src(), m.dst(), "power");
  IntegralOperator result = IntegralOperator::identity(m.src());
  IntegralOperator base = m;
  while (k > 0) {
    if (k & 1U) result = compose(result, base);
    k >>= 1U;
    if (k > 0) base = compose(base, base);
  }
  if (!m.is_markov()) return IntegralOperator::general(result.src(), result.dst(), result.matrix());
  return result;
}

Measure tensor(const Measure& a, const Measure& b) {
  auto space = product_space(a.space(), b.space());
  Eigen::VectorXd w(idx(space->size()));
  const auto nb = b.weights().size();
  for (Eigen::Index i = 0; i < a.weights().size(); ++i) {
    w.segment(i * nb, nb) = a.weights()(i) * b.weights();
  }
  if (a.is_probability() && b.is_probability()) {
    return Measure::probability(std::move(space), std::move(w), 1e-9);
  }
  return Measure::signed_measure(std::move(space), std::move(w));
}

TestFunction tensor(const TestFunction& a, const TestFunction& b) {
  auto space = product_space(a.space(), b.space());
  Eigen::VectorXd v(idx(space->size()));
  const auto nb = b.values().size();
  for (Eigen::Index i = 0; i < a.values().size(); ++i) {
    v.segment(i * nb, nb) = a.values()(i) * b.values();
  }
  return TestFunction(std::move(space), std::move(v));
}

IntegralOperator tensor(const IntegralOperator& a, const IntegralOperator& b) {
  auto src = product_space(a.src(), b.src());
  auto dst = product_space(a.dst(), b.dst());
  Eigen::MatrixXd m(idx(src->size()), idx(dst->size()));
  const auto& am = a.matrix();
  const auto& bm = b.matrix();
  for (Eigen::Index i = 0; i < am.rows(); ++i) {
    for (Eigen::Index j = 0; j < am.cols(); ++j) {
      m.block(i * bm.rows(), j * bm.cols(), bm.rows(), bm.cols()) = am(i, j) * bm;
    }
  }
  if (a.is_markov() && b.is_markov()) {
    return IntegralOperator::markov(std::move(src), std::move(dst), std::move(m), 1e-9);
  }
  return IntegralOperator::general(std::move(src), std::move(dst), std::move(m));
}

double max_abs_diff(const Measure& a, const Measure& b) {
  require_same_space(a.space(), b.space(), "max_abs_diff");
  return (a.weights() - b.weights()).cwiseAbs().maxCoeff();
}

double max_abs_diff(const IntegralOperator& a, const IntegralOperator& b) {
  require_same_space(a.src(), b.src(), "max_abs_diff (source)");
  require_same_space(a.dst(), b.dst(), "max_abs_diff (target)");
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace imcmc
