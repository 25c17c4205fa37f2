#pragma once

// Replicated simulation of the fluctuation fields U_n^(k)(f) and their
// comparison with the oracle's limiting variances.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "imcmc/clt.hpp"
#include "imcmc/engine.hpp"

namespace imcmc {

struct NamedFunction {
  std::string name;
  std::size_t level = 0;
  TestFunction f;
};

struct ReplicateOptions {
  std::size_t replicates = 2;
  std::vector<std::size_t> checkpoints;  ///< ascending; the last one sets the run length
  std::size_t workers = 0;               ///< 0: hardware concurrency
  /// Every replicate reuses replicate id 0 (identical streams); a test hook.
  bool same_stream = false;
};

/// U values in replicate-major order: value(r, function, checkpoint).
struct FluctuationSamples {
  std::vector<NamedFunction> functions;
  std::vector<std::size_t> checkpoints;
  std::size_t replicates = 0;
  std::vector<double> values;

  double value(std::size_t r, std::size_t fi, std::size_t ci) const {
    return values[(r * functions.size() + fi) * checkpoints.size() + ci];
  }
  /// All replicates of one (function, checkpoint) column.
  std::vector<double> column(std::size_t fi, std::size_t ci) const;
};

/// Runs R independent replicates (replicate ids 0..R-1 on config.seed)
/// concurrently. U^(k) is centred at the oracle limit pi^(k). Results do not
/// depend on the worker count.
FluctuationSamples run_replicates(const EngineConfig& config, const std::vector<NamedFunction>& functions,
                                  const ReplicateOptions& options);

struct ColumnStats {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double skew = 0.0;
  double exkurt = 0.0;
  double ks = 0.0;        ///< sup |F_R - Phi| of the studentized sample
  bool degenerate = false;
};

ColumnStats column_stats(const std::vector<double>& x);
/// Unbiased sample covariance.
double sample_covariance(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FluctuationRow {
  std::size_t level = 0;
  std::string function;
  std::size_t n = 0;
  std::size_t replicates = 0;
  double var_theory = kNaN;
  double var_empirical = 0.0;
  double se = kNaN;
  double z = kNaN;
  double skew = 0.0;
  double exkurt = 0.0;
  bool pass = false;
  double ks = 0.0;
  double bias_allowance = 0.0;
  bool degenerate = false;
};

struct CovarianceRow {
  std::size_t level_a = 0;
  std::string function_a;
  std::size_t level_b = 0;
  std::string function_b;
  std::size_t n = 0;
  std::size_t replicates = 0;
  double cov_theory = kNaN;
  double cov_theory_product_form = kNaN;
  double cov_empirical = 0.0;
  double se = kNaN;
  double z = kNaN;
  bool pass = false;
};

struct FluctuationReport {
  std::vector<FluctuationRow> rows;
  std::vector<CovarianceRow> covariances;
  /// True when every row at the largest horizon passes.
  bool all_pass() const;
};

/// Empirical side only: variances, normality statistics and all pairwise
/// covariances between functions at each checkpoint. Theory fields are NaN.
FluctuationReport empirical_fluctuations(const FluctuationSamples& samples);

struct VerifyOptions {
  double c_bias = 1.0;
  /// Multiplies every theoretical variance and covariance (detector self-test).
  double variance_scale = 1.0;
  /// Pairs of function indices whose cross-covariance is checked.
  std::vector<std::pair<std::size_t, std::size_t>> cross_pairs;
  /// |skew| and |excess kurtosis| bound; <= 0 keeps them informational.
  double normality_threshold = 0.0;
};

/// b(n) = c_bias (log(n+1))^k / sqrt(n+1).
double bias_allowance(double c_bias, std::size_t k, std::size_t n);

/// Fills theory, standard errors, z-scores and PASS flags:
///   |var_emp - var_theory| <= 3 SE + b(n),  SE = var_theory sqrt(2 / (R-1)),
/// and for covariances SE = sqrt((var_a var_b + cov^2) / (R-1)).
FluctuationReport verify_theorem(const CltSpec& spec, const FluctuationSamples& samples,
                                 const VerifyOptions& options);

/// Report CSV: level,function,n,R,var_theory,var_empirical,se,z,skew,exkurt,pass,
/// ks,bias_allowance,degenerate. Doubles use 17 significant digits.
void write_report_csv(std::ostream& out, const FluctuationReport& report);
/// Reads rows written by write_report_csv; '#' lines are skipped.
std::vector<FluctuationRow> read_report_csv(std::istream& in);
void write_covariance_csv(std::ostream& out, const FluctuationReport& report);

/// Slope of log E|eta_n^(k)(f) - pi^(k)(f)| against log n, estimated from
/// the mean absolute error over R replicates at each n.
struct RateFit {
  std::vector<std::size_t> ns;
  std::vector<double> mean_abs_error;
  double slope = 0.0;
};
RateFit lln_rate(const EngineConfig& config, const NamedFunction& f, std::size_t replicates,
                 const std::vector<std::size_t>& ns, std::size_t workers = 0);

}  // namespace imcmc
