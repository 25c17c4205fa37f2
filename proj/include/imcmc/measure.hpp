#pragma once

// Finite-space measure and kernel algebra.
//
// Conventions:
//  * Total variation is the sup over the unit ball of bounded functions, i.e.
//    the sum of absolute weights. Two distinct Diracs are at distance 2.
//  * Product spaces use mixed-radix indexing with the left factor as the high
//    digit: index(a, b) = a * |B| + b.
//  * Spaces are capped at kMaxStates states; all storage is dense.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace imcmc {

inline constexpr std::size_t kMaxStates = 4096;
inline constexpr double kDefaultTol = 1e-12;

class FiniteSpace;
using SpaceRef = std::shared_ptr<const FiniteSpace>;

/// An enumerated state space with unique labels.
class FiniteSpace {
 public:
  /// Throws InvalidArgument on empty spaces, duplicate labels or more than
  /// kMaxStates states.
  static SpaceRef make(std::string id, std::vector<std::string> labels);
  /// States labelled "1", "2", ..., "size".
  static SpaceRef make(std::string id, std::size_t size);

  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

 private:
  FiniteSpace(std::string id, std::vector<std::string> labels)
      : id_(std::move(id)), labels_(std::move(labels)) {}

  std::string id_;
  std::vector<std::string> labels_;
};

/// Spaces are equal when they carry the same id and cardinality.
bool same_space(const SpaceRef& a, const SpaceRef& b) noexcept;
/// Throws SpaceMismatch naming both spaces unless same_space(a, b).
void require_same_space(const SpaceRef& a, const SpaceRef& b,
                        const char* context);

/// Product space a x b; left factor is the high digit.
SpaceRef product_space(const SpaceRef& a, const SpaceRef& b);

class TestFunction {
 public:
  TestFunction(SpaceRef space, Eigen::VectorXd values);

  static TestFunction constant(SpaceRef space, double c);
  static TestFunction indicator(SpaceRef space, std::size_t state);

  const SpaceRef& space() const noexcept { return space_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double operator()(std::size_t x) const { return values_(static_cast<Eigen::Index>(x)); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

  /// Supremum norm.
  double sup_norm() const;

  TestFunction operator+(const TestFunction& o) const;
  TestFunction operator-(const TestFunction& o) const;
  TestFunction operator*(double a) const;
  /// Pointwise product.
  TestFunction times(const TestFunction& o) const;

 private:
  SpaceRef space_;
  Eigen::VectorXd values_;
};

class Measure {
 public:
  enum class Kind { kSigned, kProbability };

  /// Validated probability measure: nonnegative weights summing to one
  /// within tol.
  static Measure probability(SpaceRef space, Eigen::VectorXd weights,
                             double tol = kDefaultTol);
  static Measure signed_measure(SpaceRef space, Eigen::VectorXd weights);
  static Measure dirac(SpaceRef space, std::size_t state);
  static Measure uniform(SpaceRef space);
  /// Normalizes nonnegative weights with positive total mass.
  static Measure normalized(SpaceRef space, Eigen::VectorXd weights);

  const SpaceRef& space() const noexcept { return space_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Kind kind() const noexcept { return kind_; }
  bool is_probability() const noexcept { return kind_ == Kind::kProbability; }
  double operator()(std::size_t x) const { return weights_(static_cast<Eigen::Index>(x)); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  double mass() const { return weights_.sum(); }

  Measure operator+(const Measure& o) const;
  Measure operator-(const Measure& o) const;
  Measure operator*(double a) const;

 private:
  Measure(SpaceRef space, Eigen::VectorXd weights, Kind kind)
      : space_(std::move(space)), weights_(std::move(weights)), kind_(kind) {}

  SpaceRef space_;
  Eigen::VectorXd weights_;
  Kind kind_;
};

/// Dense operator M(x, y) from src to dst. Acts on functions of dst to give
/// functions of src, and on measures of src to give measures of dst.
class IntegralOperator {
 public:
  /// Validated Markov kernel: nonnegative rows summing to one within tol.
  static IntegralOperator markov(SpaceRef src, SpaceRef dst,
                                 Eigen::MatrixXd matrix,
                                 double tol = kDefaultTol);
  static IntegralOperator general(SpaceRef src, SpaceRef dst,
                                  Eigen::MatrixXd matrix);
  static IntegralOperator identity(SpaceRef space);
  /// Kernel with every row equal to mu: M(x, .) = mu.
  static IntegralOperator rank_one(SpaceRef src, const Measure& mu);

  const SpaceRef& src() const noexcept { return src_; }
  const SpaceRef& dst() const noexcept { return dst_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  bool is_markov() const noexcept { return markov_; }
  double operator()(std::size_t x, std::size_t y) const {
    return matrix_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }

  /// Operator norm induced by the sup norm: max_x sum_y |M(x, y)|.
  double sup_norm() const;

  IntegralOperator operator+(const IntegralOperator& o) const;
  IntegralOperator operator-(const IntegralOperator& o) const;
  IntegralOperator operator*(double a) const;

 private:
  IntegralOperator(SpaceRef src, SpaceRef dst, Eigen::MatrixXd matrix,
                   bool markov)
      : src_(std::move(src)),
        dst_(std::move(dst)),
        matrix_(std::move(matrix)),
        markov_(markov) {}

  SpaceRef src_;
  SpaceRef dst_;
  Eigen::MatrixXd matrix_;
  bool markov_;
};

/// (M f)(x) = sum_y M(x, y) f(y).
TestFunction apply_operator(const IntegralOperator& m, const TestFunction& f);
/// (mu M)(y) = sum_x mu(x) M(x, y). Probability in, Markov M: probability out.
Measure act_measure(const Measure& mu, const IntegralOperator& m);
double integrate(const Measure& mu, const TestFunction& f);
double tv_norm(const Measure& mu);
double oscillation(const TestFunction& f);
/// Dobrushin coefficient: max over row pairs of half the l1 distance.
/// Throws InvalidArgument for non-Markov operators.
double dobrushin(const IntegralOperator& m);
/// Matrix product M N; Markov iff both factors are.
IntegralOperator compose(const IntegralOperator& m, const IntegralOperator& n);
/// M^k for a square operator (k = 0 gives the identity).
IntegralOperator power(const IntegralOperator& m, unsigned k);

Measure tensor(const Measure& a, const Measure& b);
TestFunction tensor(const TestFunction& a, const TestFunction& b);
IntegralOperator tensor(const IntegralOperator& a, const IntegralOperator& b);

/// Largest absolute entrywise difference; spaces must match.
double max_abs_diff(const Measure& a, const Measure& b);
double max_abs_diff(const IntegralOperator& a, const IntegralOperator& b);

}  // namespace imcmc
