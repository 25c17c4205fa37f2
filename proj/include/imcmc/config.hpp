#pragma once

// Run configuration: flat sectioned key = value text.
//
//   # comment
//   [model]
//   type = fk                 # fk | annealing | chain
//   preset = toy              # toy (fk), annealing4 (annealing); omit for explicit tables
//   p = 0.25
//   betas = [0.5, 1.0, 1.5, 2.0]
//   kernel = mh               # mh | direct
//
//   [engine]
//   levels = 2
//   iterations = 20000
//   seed = 1
//   replicates = 400
//   checkpoints = [1000, 10000, 20000]
//   workers = 0
//
//   [functions]
//   t0@0 = terminal_indicator(1)
//   g@1 = [1, 0, 0, 1]
//
//   [verify]
//   c_bias = 1.0
//   cross = [t1:t0]
//   normality_threshold = 0
//
//   [output]
//   dir = out
//
// Explicit fk tables: sizes = [..], initial = [..], level0_kernel = [[..]],
// transition_l = [[..]] (l = 1..L), potential_l = [..] (l = 0..L-1).
// Explicit annealing tables: energy, betas, epsilon, proposal_k, proposal_l,
// optional reference. Chains: matrix = [[..]].

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "imcmc/error.hpp"
#include "imcmc/harness.hpp"
#include "imcmc/model.hpp"

namespace imcmc {

/// Malformed configuration; carries the line (0 when not tied to one) and the
/// section.key path of the offending field.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& msg);
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct RunConfig {
  std::shared_ptr<const ModelSpec> model;
  std::size_t levels = 0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t replicates = 2;
  std::vector<std::size_t> checkpoints;
  std::size_t workers = 0;
  std::vector<NamedFunction> functions;
  std::vector<std::pair<std::size_t, std::size_t>> cross_pairs;
  double c_bias = 1.0;
  double normality_threshold = 0.0;
  std::string output_dir = ".";
  std::string hash;  ///< of the config bytes

  EngineConfig engine() const;
};

RunConfig parse_config(const std::string& text);
/// Throws ConfigError when the file cannot be read.
RunConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string config_hash(const std::string& bytes);

/// Indicator of the terminal coordinate equal to `label` on level l.
TestFunction terminal_indicator(const ModelSpec& model, std::size_t l, const std::string& label);

}  // namespace imcmc
