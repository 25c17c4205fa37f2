// Command-line front end: oracle, simulate, verify, weights.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "imcmc/clt.hpp"
#include "imcmc/config.hpp"
#include "imcmc/engine.hpp"
#include "imcmc/error.hpp"
#include "imcmc/harness.hpp"
#include "imcmc/resolvent.hpp"
#include "imcmc/version.hpp"
#include "imcmc/weights.hpp"

namespace fs = std::filesystem;
using namespace imcmc;

namespace {

enum Exit { kPass = 0, kFail = 1, kConfig = 2, kNumeric = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
  bool inject = false;
  std::optional<std::size_t> replicates;
  std::size_t k_max = 3;
  std::size_t n = 100000;
};

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<std::uint64_t> env_uint(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v, &end, 10);
  if (*end != '\0') throw ConfigError(0, name, "expected a nonnegative integer");
  return x;
}

// Flags win over environment, environment over the config file.
RunConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError(0, "--config", "required for this command");
  RunConfig c = load_config(o.config);
  if (auto s = env_uint("IMCMC_SEED")) c.seed = *s;
  if (auto w = env_uint("IMCMC_WORKERS")) c.workers = *w;
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.replicates) c.replicates = *o.replicates;
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path p = fs::path(dir) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError(0, "output.dir", "cannot write " + p.string());
  return f;
}

// Path labels "(1,2)" are written as "(1 2)" to keep the CSV flat.
std::string csv_label(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  return s;
}

void trailer(std::ostream& out, const std::string& hash) {
  out << "# config_hash " << hash << "\n# version " << kVersion << "\n";
}

int cmd_oracle(const Options& o) {
  const RunConfig c = load(o);
  const ModelSpec& m = *c.model;
  const CltSpec spec = CltSpec::build(m, c.levels);

  auto limits = open_out(c.output_dir, "oracle_limits.csv");
  limits << "level,state,label,pi\n";
  auto marg = open_out(c.output_dir, "oracle_marginals.csv");
  marg << "level,terminal_label,marginal\n";
  auto levels = open_out(c.output_dir, "oracle_levels.csv");
  levels << "level,states,n0,m_n0,p_n0,poisson_residual,invariance_residual,d_sup_norm,"
            "fixed_point_tv\n";
  std::cout << "level  states  n0  poisson_res  invariance_res  |D|  fixed_point_tv\n";
  for (std::size_t l = 0; l <= c.levels; ++l) {
    const Measure& pi = spec.limit(l);
    const SpaceRef& s = pi.space();
    for (std::size_t x = 0; x < s->size(); ++x) {
      limits << l << ',' << x << ',' << csv_label(s->label(x)) << ',' << g17(pi.weights()(x)) << '\n';
    }
    const SpaceRef& base = terminal_space(m, l);
    std::vector<double> tm(base->size(), 0.0);
    for (std::size_t x = 0; x < s->size(); ++x) tm[terminal_state(m, l, x)] += pi.weights()(x);
    for (std::size_t y = 0; y < base->size(); ++y) {
      marg << l << ',' << csv_label(base->label(y)) << ',' << g17(tm[y]) << '\n';
    }
    const auto& b = spec.bundle(l);
    const double pr = poisson_residual(b);
    const double ir = invariance_residual(b);
    const double dn = l > 0 ? spec.d(l).sup_norm() : 0.0;
    const double fp = l > 0 ? tv_norm(phi(m, l, spec.limit(l - 1)) - pi) : 0.0;
    levels << l << ',' << s->size() << ',' << b.contraction.n0 << ',' << g17(b.contraction.m_n0)
           << ',' << g17(b.contraction.p_n0) << ',' << g17(pr) << ',' << g17(ir) << ','
           << g17(dn) << ',' << g17(fp) << '\n';
    std::cout << std::setw(5) << l << std::setw(8) << s->size() << std::setw(4)
              << b.contraction.n0 << "  " << std::scientific << std::setprecision(2) << pr
              << "     " << ir << "        " << std::defaultfloat << std::setprecision(6) << dn
              << "  " << std::scientific << std::setprecision(2) << fp << std::defaultfloat
              << '\n';
  }

  auto vars = open_out(c.output_dir, "oracle_variances.csv");
  vars << "level,function,local_variance,asymptotic_variance\n";
  std::cout << "\nlevel  function  asymptotic_variance\n";
  for (const auto& f : c.functions) {
    const double lv = level_variance(spec, f.level, f.f);
    const double av = asymptotic_variance(spec, f.level, f.f);
    vars << f.level << ',' << f.name << ',' << g17(lv) << ',' << g17(av) << '\n';
    std::cout << std::setw(5) << f.level << "  " << f.name << "  " << std::setprecision(10) << av
              << '\n';
  }
  for (auto* f : {&limits, &marg, &levels, &vars}) trailer(*f, c.hash);
  return kPass;
}

int cmd_simulate(const Options& o) {
  const RunConfig c = load(o);
  const std::size_t reps = o.replicates ? *o.replicates : 1;
  if (reps < 1) throw ConfigError(0, "--replicates", "must be >= 1");
  const Sampler sampler(c.model, c.levels);
  auto traj = open_out(c.output_dir, "trajectory.csv");
  traj << "replicate,level,iteration,state_index\n";
  auto occ = open_out(c.output_dir, "occupation.csv");
  occ << "replicate,level,state_index,count\n";
  for (std::size_t r = 0; r < reps; ++r) {
    EngineConfig e = c.engine();
    e.replicate = static_cast<std::uint32_t>(r);
    const ChainHistory h = run(e, sampler);
    write_trajectory_rows(traj, h, e.replicate);
    for (std::size_t k = 0; k <= h.levels(); ++k) {
      const auto counts = h.counts(k);
      for (std::size_t x = 0; x < counts.size(); ++x) {
        occ << r << ',' << k << ',' << x << ',' << counts[x] << '\n';
      }
    }
  }
  trailer(traj, c.hash);
  trailer(occ, c.hash);
  std::cout << "simulated " << reps << " replicate(s), levels 0.." << c.levels << ", n = "
            << c.iterations << " -> " << c.output_dir << '\n';
  return kPass;
}

int cmd_verify(const Options& o) {
  const RunConfig c = load(o);
  if (c.replicates < 2) throw ConfigError(0, "engine.replicates", "verify needs R >= 2");
  ReplicateOptions ro;
  ro.replicates = c.replicates;
  ro.checkpoints = c.checkpoints;
  ro.workers = c.workers;
  const FluctuationSamples samples = run_replicates(c.engine(), c.functions, ro);
  VerifyOptions vo;
  vo.c_bias = c.c_bias;
  vo.variance_scale = o.inject ? 2.0 : 1.0;
  vo.cross_pairs = c.cross_pairs;
  vo.normality_threshold = c.normality_threshold;
  const FluctuationReport rep = verify_theorem(CltSpec::build(*c.model, c.levels), samples, vo);

  auto report = open_out(c.output_dir, "report.csv");
  write_report_csv(report, rep);
  trailer(report, c.hash);
  auto cov = open_out(c.output_dir, "covariance.csv");
  write_covariance_csv(cov, rep);
  trailer(cov, c.hash);

  if (o.inject) std::cout << "self-test: theoretical variances multiplied by 2\n";
  std::cout << "level  function  n  R  var_theory  var_empirical  z  skew  exkurt  result\n";
  for (const auto& r : rep.rows) {
    std::cout << r.level << "  " << r.function << "  " << r.n << "  " << r.replicates << "  "
              << std::setprecision(6) << r.var_theory << "  " << r.var_empirical << "  "
              << std::setprecision(3) << r.z << "  " << r.skew << "  " << r.exkurt << "  "
              << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  for (const auto& cr : rep.covariances) {
    if (std::isnan(cr.cov_theory)) continue;
    std::cout << "cov(" << cr.function_a << "@" << cr.level_a << ", " << cr.function_b << "@"
              << cr.level_b << ")  n=" << cr.n << std::setprecision(6) << "  theory "
              << cr.cov_theory << "  empirical " << cr.cov_empirical << std::setprecision(3)
              << "  z " << cr.z << "  " << (cr.pass ? "PASS" : "FAIL") << '\n';
  }
  const bool ok = rep.all_pass();
  std::cout << (ok ? "PASS" : "FAIL") << " at n = " << c.checkpoints.back() << '\n';
  return ok ? kPass : kFail;
}

int cmd_weights(const Options& o) {
  if (o.k_max > 6) throw ConfigError(0, "--k-max", "must be <= 6");
  if (o.n < 1) throw ConfigError(0, "--n", "must be >= 1");
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file = open_out(o.out, "weights.csv");
    out = &file;
  }
  *out << "k,n,check,limit,rel_error\n";
  for (std::size_t k = 0; k <= o.k_max; ++k) {
    const double v = weight_limit_check(k, o.n);
    const double lim = weight_limit(k);
    *out << k << ',' << o.n << ',' << g17(v) << ',' << g17(lim) << ','
         << g17(std::abs(v / lim - 1.0)) << '\n';
  }
  *out << "# version " << kVersion << '\n';
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interacting MCMC simulator and CLT oracle"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration file");
    sub->add_option("--seed", o.seed, "override engine.seed (env IMCMC_SEED)");
    sub->add_option("--workers", o.workers, "replicate threads (env IMCMC_WORKERS)");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* oracle = app.add_subcommand("oracle", "limit measures, residuals and asymptotic variances");
  add_common(oracle);
  auto* simulate = app.add_subcommand("simulate", "trajectory and occupation CSV");
  add_common(simulate);
  simulate->add_option("--replicates", o.replicates, "number of replicates (default 1)");
  auto* verify = app.add_subcommand("verify", "replicated CLT check; exit 1 on FAIL");
  add_common(verify);
  verify->add_option("--replicates", o.replicates, "override engine.replicates");
  verify->add_flag("--inject-variance-error", o.inject, "double the theory (detector self-test)");
  auto* weights = app.add_subcommand("weights", "weight-array limit table");
  weights->add_option("--k-max", o.k_max, "largest order (<= 6)");
  weights->add_option("--n", o.n, "horizon");
  weights->add_option("--out", o.out, "output directory (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  try {
    if (*oracle) return cmd_oracle(o);
    if (*simulate) return cmd_simulate(o);
    if (*verify) return cmd_verify(o);
    return cmd_weights(o);
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
}
