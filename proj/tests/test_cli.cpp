#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "imcmc/harness.hpp"
#include "imcmc/presets.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("imcmc_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(IMCMC_CLI) + " " + args + " > " + (log / "stdout.txt").string() +
                          " 2> " + (log / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

// Rows of a CSV without comment lines; the header is row 0.
std::vector<std::vector<std::string>> csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

bool has_trailer(const fs::path& p) {
  const std::string s = slurp(p);
  return s.find("\n# config_hash ") != std::string::npos && s.find("\n# version ") != std::string::npos;
}

std::string toy(double p, const std::string& betas, std::size_t levels, const std::string& extra = "") {
  std::ostringstream s;
  s << "[model]\ntype = fk\npreset = toy\np = " << p << "\nbetas = " << betas
    << "\n[engine]\nlevels = " << levels << "\nseed = 4\nreplicates = 60\ncheckpoints = [500, 2000]\n"
    << extra;
  return s.str();
}

}  // namespace

TEST(Cli, OracleSymmetricToyIsUniform) {
  const auto dir = scratch("oracle_sym");
  const auto cfg = write_config(dir, toy(0.5, "[1, 2, 3]", 2));
  ASSERT_EQ(cli("oracle --config " + cfg.string() + " --out " + dir.string(), dir), 0);
  const auto lim = csv(dir / "oracle_limits.csv");
  ASSERT_EQ(lim.size(), 1u + 2 + 4 + 8);
  EXPECT_EQ(lim[3][2], "(1 1)");
  for (std::size_t i = 1; i < lim.size(); ++i) {
    const double size = std::pow(2.0, std::stod(lim[i][0]) + 1);
    EXPECT_NEAR(std::stod(lim[i][3]), 1.0 / size, 1e-14);
  }
  for (const auto& f : {"oracle_limits.csv", "oracle_marginals.csv", "oracle_levels.csv", "oracle_variances.csv"}) {
    EXPECT_TRUE(has_trailer(dir / f)) << f;
  }
  for (std::size_t i = 1; i < csv(dir / "oracle_levels.csv").size(); ++i) {
    const auto row = csv(dir / "oracle_levels.csv")[i];
    EXPECT_LT(std::stod(row[5]), 1e-10);
    EXPECT_LT(std::stod(row[6]), 1e-12);
  }
}

TEST(Cli, OracleMarginalsMatchClosedForm) {
  const auto dir = scratch("oracle_cf");
  const auto cfg = write_config(dir, toy(0.2, "[1, 2, 3]", 2));
  ASSERT_EQ(cli("oracle --config " + cfg.string() + " --out " + dir.string(), dir), 0);
  const auto cf = imcmc::toy_closed_form(0.2, {1, 2, 3});
  std::size_t checked = 0;
  for (const auto& row : csv(dir / "oracle_marginals.csv")) {
    if (row[0] == "level" || row[1] != "1") continue;
    EXPECT_NEAR(std::stod(row[2]), cf[std::stoul(row[0])].pi1, 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 3u);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = scratch("bad");
  auto cfg = write_config(dir, toy(0.3, "[1, 3, 2]", 2));
  EXPECT_EQ(cli("oracle --config " + cfg.string(), dir), 2);
  EXPECT_NE(slurp(dir / "stderr.txt").find("model.betas"), std::string::npos);
  EXPECT_EQ(cli("oracle --config " + (dir / "missing.cfg").string(), dir), 2);
  EXPECT_EQ(cli("oracle", dir), 2);
  EXPECT_EQ(cli("frobnicate", dir), 2);
  cfg = write_config(dir, toy(0.3, "[1, 2, 3]", 2));
  EXPECT_EQ(cli("verify --replicates 1 --config " + cfg.string() + " --out " + dir.string(), dir), 2);
  EXPECT_EQ(cli("weights --k-max 7", dir), 2);
}

TEST(Cli, VerifyIndependentOfWorkers) {
  const auto dir = scratch("verify");
  const auto cfg = write_config(dir, toy(0.25, "[0.5, 1, 1.5]", 2, "[verify]\ncross = [terminal_indicator(1)@1:terminal_indicator(1)@0]\n"));
  const auto a = dir / "a", b = dir / "b";
  const int rc = cli("verify --workers 1 --config " + cfg.string() + " --out " + a.string(), dir);
  ASSERT_TRUE(rc == 0 || rc == 1) << slurp(dir / "stderr.txt");
  ASSERT_EQ(cli("verify --workers 3 --config " + cfg.string() + " --out " + b.string(), dir), rc);
  EXPECT_EQ(slurp(a / "report.csv"), slurp(b / "report.csv"));
  EXPECT_EQ(slurp(a / "covariance.csv"), slurp(b / "covariance.csv"));
  EXPECT_TRUE(has_trailer(a / "report.csv"));
  EXPECT_TRUE(has_trailer(a / "covariance.csv"));

  std::ifstream in(a / "report.csv");
  const auto rows = imcmc::read_report_csv(in);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.replicates, 60u);
    EXPECT_GE(r.var_empirical, 0.0);
  }
  // Writing the parsed rows back reproduces the file body exactly.
  imcmc::FluctuationReport rep;
  rep.rows = rows;
  std::ostringstream again;
  imcmc::write_report_csv(again, rep);
  EXPECT_EQ(slurp(a / "report.csv").rfind(again.str(), 0), 0u);
}

TEST(Cli, BundledAcceptanceConfigPassesAndDetectorFails) {
  const auto dir = scratch("accept");
  const std::string cfg = std::string(IMCMC_SOURCE_DIR) + "/configs/toy_acceptance.cfg";
  EXPECT_EQ(cli("verify --config " + cfg + " --out " + (dir / "ok").string(), dir), 0)
      << slurp(dir / "stdout.txt");
  EXPECT_EQ(cli("verify --inject-variance-error --config " + cfg + " --out " + (dir / "inj").string(), dir), 1)
      << slurp(dir / "stdout.txt");
}

TEST(Cli, SimulateIsDeterministic) {
  const auto dir = scratch("simulate");
  const auto cfg = write_config(dir, toy(0.25, "[0.5, 1, 1.5, 2]", 1));
  const auto a = dir / "a", b = dir / "b", c = dir / "c", d = dir / "d";
  ASSERT_EQ(cli("simulate --config " + cfg.string() + " --out " + a.string(), dir), 0);
  ASSERT_EQ(cli("simulate --config " + cfg.string() + " --out " + b.string(), dir), 0);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "occupation.csv"), slurp(b / "occupation.csv"));
  EXPECT_TRUE(has_trailer(a / "trajectory.csv"));

  const auto traj = csv(a / "trajectory.csv");
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
  std::map<std::string, std::uint64_t> per_level;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    ++counts[{traj[i][1], traj[i][3]}];
    ++per_level[traj[i][1]];
  }
  EXPECT_EQ(per_level.size(), 2u);
  for (const auto& [lvl, total] : per_level) EXPECT_EQ(total, 2001u) << lvl;
  const auto occ = csv(a / "occupation.csv");
  std::map<std::string, std::uint64_t> occ_total;
  for (std::size_t i = 1; i < occ.size(); ++i) {
    EXPECT_EQ((counts[{occ[i][1], occ[i][2]}]), std::stoull(occ[i][3]));
    occ_total[occ[i][1]] += std::stoull(occ[i][3]);
  }
  for (const auto& [lvl, total] : occ_total) EXPECT_EQ(total, 2001u);

  // Seed precedence: flag over environment over file.
  ::setenv("IMCMC_SEED", "12345", 1);
  ASSERT_EQ(cli("simulate --config " + cfg.string() + " --out " + c.string(), dir), 0);
  ASSERT_EQ(cli("simulate --seed 4 --config " + cfg.string() + " --out " + d.string(), dir), 0);
  ::unsetenv("IMCMC_SEED");
  EXPECT_NE(slurp(a / "trajectory.csv"), slurp(c / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(d / "trajectory.csv"));
}

TEST(Cli, WeightsTable) {
  const auto dir = scratch("weights");
  ASSERT_EQ(cli("weights --k-max 3 --n 100000 --out " + dir.string(), dir), 0);
  const auto rows = csv(dir / "weights.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_NEAR(std::stod(rows[1][2]), 100001.0 / 100000.0, 1e-12);
  const double limits[] = {1, 2, 6, 20};
  const double tol[] = {1e-4, 0.02, 0.03, 0.05};
  for (std::size_t k = 0; k <= 3; ++k) {
    EXPECT_EQ(std::stod(rows[k + 1][3]), limits[k]);
    EXPECT_LT(std::stod(rows[k + 1][4]), tol[k]);
  }
}
