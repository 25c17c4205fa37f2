#include "imcmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "imcmc/error.hpp"

namespace imcmc {

namespace {

std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
  std::size_t w = requested;
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, jobs));
}

// Runs job(r) for r in [0, count) on a pool; the first failure is rethrown
// after all workers stop.
template <class Job>
void parallel_for(std::size_t count, std::size_t workers, Job job) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= count || failed.load()) return;
      try {
        job(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  const std::size_t n = resolve_workers(workers, count);
  if (n == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw InvalidArgument("report csv: bad number '" + s + "'");
  return v;
}

void check_functions(const EngineConfig& config, const std::vector<NamedFunction>& functions) {
  if (!config.model) throw InvalidArgument("run_replicates: no model");
  for (const auto& f : functions) {
    if (f.level > config.levels) {
      throw InvalidArgument("run_replicates: function '" + f.name + "' at level " +
                            std::to_string(f.level) + " above simulated level " +
                            std::to_string(config.levels));
    }
    require_same_space(f.f.space(), level_space(*config.model, f.level),
                       "run_replicates function");
  }
}

}  // namespace

std::vector<double> FluctuationSamples::column(std::size_t fi, std::size_t ci) const {
  std::vector<double> out(replicates);
  for (std::size_t r = 0; r < replicates; ++r) out[r] = value(r, fi, ci);
  return out;
}

FluctuationSamples run_replicates(const EngineConfig& config, const std::vector<NamedFunction>& functions,
                                  const ReplicateOptions& options) {
  if (options.replicates < 2) throw InvalidArgument("run_replicates: need R >= 2 replicates");
  if (options.checkpoints.empty()) throw InvalidArgument("run_replicates: no checkpoints");
  if (!std::is_sorted(options.checkpoints.begin(), options.checkpoints.end())) {
    throw InvalidArgument("run_replicates: checkpoints must be ascending");
  }
  check_functions(config, functions);

  FluctuationSamples out;
  out.functions = functions;
  out.checkpoints = options.checkpoints;
  out.replicates = options.replicates;
  out.values.assign(options.replicates * functions.size() * options.checkpoints.size(), 0.0);

  EngineConfig base = config;
  base.iterations = options.checkpoints.back();
  const Sampler sampler(config.model, config.levels);
  std::vector<Measure> limits;
  for (std::size_t l = 0; l <= config.levels; ++l) limits.push_back(limit_measure(*config.model, l));

  const std::size_t nf = functions.size();
  const std::size_t nc = options.checkpoints.size();
  parallel_for(options.replicates, options.workers, [&](std::size_t r) {
    EngineConfig c = base;
    c.replicate = options.same_stream ? 0u : static_cast<std::uint32_t>(r);
    ChainHistory h = [&] {
      try {
        return run(c, sampler);
      } catch (const Error& e) {
        throw NumericalError("replicate " + std::to_string(r) + ": " + e.what());
      }
    }();
    for (std::size_t fi = 0; fi < nf; ++fi) {
      const auto& f = functions[fi];
      for (std::size_t ci = 0; ci < nc; ++ci) {
        out.values[(r * nf + fi) * nc + ci] =
            fluctuation_field(h, f.level, options.checkpoints[ci], f.f, limits[f.level]);
      }
    }
  });
  return out;
}

ColumnStats column_stats(const std::vector<double>& x) {
  ColumnStats s;
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("column_stats: need at least two samples");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  s.mean = mean;
  s.variance = m2 / static_cast<double>(n - 1);
  const double scale = std::max(1.0, std::abs(mean));
  if (!(s.variance > 1e-24 * scale * scale)) {
    s.degenerate = true;
    s.variance = std::max(0.0, s.variance);
    return s;
  }
  const double pop2 = m2 / static_cast<double>(n);
  s.skew = (m3 / static_cast<double>(n)) / std::pow(pop2, 1.5);
  s.exkurt = (m4 / static_cast<double>(n)) / (pop2 * pop2) - 3.0;

  std::vector<double> z(x);
  const double sd = std::sqrt(s.variance);
  for (double& v : z) v = (v - mean) / sd;
  std::sort(z.begin(), z.end());
  const boost::math::normal phi;
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = boost::math::cdf(phi, z[i]);
    d = std::max({d, static_cast<double>(i + 1) / static_cast<double>(n) - c,
                  c - static_cast<double>(i) / static_cast<double>(n)});
  }
  s.ks = d;
  return s;
}

double sample_covariance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidArgument("sample_covariance: need two columns of equal length >= 2");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma) * (b[i] - mb);
  return c / (n - 1.0);
}

bool FluctuationReport::all_pass() const {
  if (rows.empty()) return false;
  std::size_t top = 0;
  for (const auto& r : rows) top = std::max(top, r.n);
  for (const auto& r : rows) {
    if (r.n == top && !r.pass) return false;
  }
  for (const auto& c : covariances) {
    if (c.n == top && !std::isnan(c.cov_theory) && !c.pass) return false;
  }
  return true;
}

FluctuationReport empirical_fluctuations(const FluctuationSamples& samples) {
  if (samples.replicates < 2) throw InvalidArgument("empirical_fluctuations: need R >= 2");
  FluctuationReport rep;
  const std::size_t nf = samples.functions.size();
  for (std::size_t fi = 0; fi < nf; ++fi) {
    for (std::size_t ci = 0; ci < samples.checkpoints.size(); ++ci) {
      const ColumnStats s = column_stats(samples.column(fi, ci));
      FluctuationRow row;
      row.level = samples.functions[fi].level;
      row.function = samples.functions[fi].name;
      row.n = samples.checkpoints[ci];
      row.replicates = samples.replicates;
      row.var_empirical = s.variance;
      row.skew = s.skew;
      row.exkurt = s.exkurt;
      row.ks = s.ks;
      row.degenerate = s.degenerate;
      rep.rows.push_back(row);
    }
  }
  for (std::size_t a = 0; a < nf; ++a) {
    for (std::size_t b = a + 1; b < nf; ++b) {
      for (std::size_t ci = 0; ci < samples.checkpoints.size(); ++ci) {
        CovarianceRow c;
        c.level_a = samples.functions[a].level;
        c.function_a = samples.functions[a].name;
        c.level_b = samples.functions[b].level;
        c.function_b = samples.functions[b].name;
        c.n = samples.checkpoints[ci];
        c.replicates = samples.replicates;
        c.cov_empirical = sample_covariance(samples.column(a, ci), samples.column(b, ci));
        rep.covariances.push_back(c);
      }
    }
  }
  return rep;
}

double bias_allowance(double c_bias, std::size_t k, std::size_t n) {
  const double x = static_cast<double>(n) + 1.0;
  return c_bias * std::pow(std::log(x), static_cast<double>(k)) / std::sqrt(x);
}

FluctuationReport verify_theorem(const CltSpec& spec, const FluctuationSamples& samples,
                                 const VerifyOptions& options) {
  FluctuationReport rep = empirical_fluctuations(samples);
  const std::size_t nf = samples.functions.size();
  const std::size_t nc = samples.checkpoints.size();
  const double rm1 = static_cast<double>(samples.replicates - 1);

  std::vector<double> var_theory(nf);
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const auto& f = samples.functions[fi];
    if (f.level > spec.top_level()) {
      throw InvalidArgument("verify_theorem: function '" + f.name + "' above oracle level " +
                            std::to_string(spec.top_level()));
    }
    var_theory[fi] = options.variance_scale * asymptotic_variance(spec, f.level, f.f);
  }
  for (std::size_t fi = 0; fi < nf; ++fi) {
    for (std::size_t ci = 0; ci < nc; ++ci) {
      FluctuationRow& row = rep.rows[fi * nc + ci];
      row.var_theory = var_theory[fi];
      row.se = var_theory[fi] * std::sqrt(2.0 / rm1);
      row.bias_allowance = bias_allowance(options.c_bias, row.level, row.n);
      const double diff = row.var_empirical - row.var_theory;
      row.z = row.se > 0.0 ? diff / row.se : (diff == 0.0 ? 0.0 : kNaN);
      row.pass = std::abs(diff) <= 3.0 * row.se + row.bias_allowance;
      if (options.normality_threshold > 0.0 && !row.degenerate) {
        row.pass = row.pass && std::abs(row.skew) <= options.normality_threshold &&
                   std::abs(row.exkurt) <= options.normality_threshold;
      }
    }
  }

  // Covariance rows are laid out pair-major in the order (a < b).
  auto pair_offset = [&](std::size_t a, std::size_t b) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i) idx += nf - i - 1;
    return (idx + (b - a - 1)) * nc;
  };
  for (auto [a, b] : options.cross_pairs) {
    if (a == b || a >= nf || b >= nf) throw InvalidArgument("verify_theorem: bad cross pair");
    if (a > b) std::swap(a, b);
    const auto& fa = samples.functions[a];
    const auto& fb = samples.functions[b];
    const double cov = options.variance_scale * asymptotic_cross_covariance(spec, fa.level, fb.level, fa.f, fb.f);
    const double cov_prod = options.variance_scale *
        asymptotic_cross_covariance_product_form(spec, fa.level, fb.level, fa.f, fb.f);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      CovarianceRow& c = rep.covariances[pair_offset(a, b) + ci];
      c.cov_theory = cov;
      c.cov_theory_product_form = cov_prod;
      c.se = std::sqrt(std::max(0.0, var_theory[a] * var_theory[b] + cov * cov) / rm1);
      const double diff = c.cov_empirical - cov;
      c.z = c.se > 0.0 ? diff / c.se : kNaN;
      c.pass = std::abs(diff) <= 3.0 * c.se;
    }
  }
  return rep;
}

void write_report_csv(std::ostream& out, const FluctuationReport& report) {
  out << "level,function,n,R,var_theory,var_empirical,se,z,skew,exkurt,pass,ks,bias_allowance,"
         "degenerate\n";
  for (const auto& r : report.rows) {
    out << r.level << ',' << r.function << ',' << r.n << ',' << r.replicates << ','
        << fmt(r.var_theory) << ',' << fmt(r.var_empirical) << ',' << fmt(r.se) << ','
        << fmt(r.z) << ',' << fmt(r.skew) << ',' << fmt(r.exkurt) << ','
        << (r.pass ? "PASS" : "FAIL") << ',' << fmt(r.ks) << ',' << fmt(r.bias_allowance) << ','
        << (r.degenerate ? 1 : 0) << '\n';
  }
}

std::vector<FluctuationRow> read_report_csv(std::istream& in) {
  std::vector<FluctuationRow> rows;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 14) {
      throw InvalidArgument("report csv line " + std::to_string(lineno) + ": expected 14 fields");
    }
    FluctuationRow r;
    r.level = std::stoul(f[0]);
    r.function = f[1];
    r.n = std::stoul(f[2]);
    r.replicates = std::stoul(f[3]);
    r.var_theory = parse_double(f[4]);
    r.var_empirical = parse_double(f[5]);
    r.se = parse_double(f[6]);
    r.z = parse_double(f[7]);
    r.skew = parse_double(f[8]);
    r.exkurt = parse_double(f[9]);
    r.pass = f[10] == "PASS";
    r.ks = parse_double(f[11]);
    r.bias_allowance = parse_double(f[12]);
    r.degenerate = f[13] == "1";
    rows.push_back(r);
  }
  return rows;
}

void write_covariance_csv(std::ostream& out, const FluctuationReport& report) {
  out << "level_a,function_a,level_b,function_b,n,R,cov_theory,cov_theory_product_form,"
         "cov_empirical,se,z,pass\n";
  for (const auto& c : report.covariances) {
    out << c.level_a << ',' << c.function_a << ',' << c.level_b << ',' << c.function_b << ','
        << c.n << ',' << c.replicates << ',' << fmt(c.cov_theory) << ','
        << fmt(c.cov_theory_product_form) << ',' << fmt(c.cov_empirical) << ',' << fmt(c.se)
        << ',' << fmt(c.z) << ',' << (std::isnan(c.cov_theory) ? "NA" : (c.pass ? "PASS" : "FAIL"))
        << '\n';
  }
}

RateFit lln_rate(const EngineConfig& config, const NamedFunction& f, std::size_t replicates,
                 const std::vector<std::size_t>& ns, std::size_t workers) {
  if (ns.size() < 2) throw InvalidArgument("lln_rate: need at least two horizons");
  ReplicateOptions opt;
  opt.replicates = replicates;
  opt.checkpoints = ns;
  opt.workers = workers;
  const FluctuationSamples s = run_replicates(config, {f}, opt);
  RateFit fit;
  fit.ns = ns;
  for (std::size_t ci = 0; ci < ns.size(); ++ci) {
    double m = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) m += std::abs(s.value(r, 0, ci));
    // |eta - pi| = |U| / sqrt(n+1)
    m /= static_cast<double>(replicates) * std::sqrt(static_cast<double>(ns[ci]) + 1.0);
    fit.mean_abs_error.push_back(m);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(static_cast<double>(ns[i]));
    const double y = std::log(fit.mean_abs_error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return fit;
}

}  // namespace imcmc
