#include "imcmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "imcmc/annealing_model.hpp"
#include "imcmc/fk_model.hpp"
#include "imcmc/presets.hpp"

namespace imcmc {

ConfigError::ConfigError(std::size_t line, std::string field, const std::string& msg)
    : InvalidArgument((line ? "line " + std::to_string(line) + ": " : std::string()) + field +
                      ": " + msg),
      line_(line),
      field_(std::move(field)) {}

namespace {

constexpr double kStochasticTol = 1e-9;

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Section -> key -> entry, keeping the order of [functions] keys.
struct Document {
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::vector<std::string> function_keys;

  Entry* find(const std::string& section, const std::string& key) {
    auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }
};

const std::set<std::string> kSections{"model", "engine", "functions", "verify", "output"};

Document tokenize(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(lineno, "section", "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(section)) throw ConfigError(lineno, section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, section, "expected key = value");
    if (section.empty()) throw ConfigError(lineno, "", "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, section, "empty key");
    auto& sec = doc.sections[section];
    if (sec.count(key)) throw ConfigError(lineno, section + "." + key, "duplicate key");
    sec[key] = Entry{value, lineno, false};
    if (section == "functions") doc.function_keys.push_back(key);
  }
  return doc;
}

// Typed access to one section.
class Section {
 public:
  Section(Document& doc, std::string name) : doc_(doc), name_(std::move(name)) {}

  bool has(const std::string& key) const {
    auto s = doc_.sections.find(name_);
    return s != doc_.sections.end() && s->second.count(key);
  }
  std::string path(const std::string& key) const { return name_ + "." + key; }
  std::size_t line(const std::string& key) const {
    return has(key) ? doc_.sections[name_][key].line : 0;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(line(key), path(key), msg);
  }

  const Entry& require(const std::string& key) {
    Entry* e = doc_.find(name_, key);
    if (!e) throw ConfigError(0, path(key), "missing required field");
    return *e;
  }

  std::string str(const std::string& key, const std::string& def) {
    Entry* e = doc_.find(name_, key);
    return e ? e->value : def;
  }
  std::string str(const std::string& key) { return require(key).value; }

  double number(const std::string& key) { return to_double(key, require(key).value); }
  double number(const std::string& key, double def) {
    return has(key) ? number(key) : def;
  }
  std::uint64_t integer(const std::string& key) { return to_uint(key, require(key).value); }
  std::uint64_t integer(const std::string& key, std::uint64_t def) {
    return has(key) ? integer(key) : def;
  }

  std::vector<double> vector(const std::string& key) {
    return parse_vector(key, require(key).value);
  }
  std::vector<std::vector<double>> matrix(const std::string& key) {
    const std::string v = require(key).value;
    std::string body = inner(key, v);
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (true) {
      while (pos < body.size() && (std::isspace(static_cast<unsigned char>(body[pos])) || body[pos] == ','))
        ++pos;
      if (pos >= body.size()) break;
      if (body[pos] != '[') fail(key, "expected '[' starting a matrix row");
      const auto close = body.find(']', pos);
      if (close == std::string::npos) fail(key, "unterminated matrix row");
      rows.push_back(parse_vector(key, body.substr(pos, close - pos + 1)));
      pos = close + 1;
    }
    if (rows.empty()) fail(key, "empty matrix");
    for (const auto& r : rows) {
      if (r.size() != rows[0].size()) fail(key, "ragged matrix rows");
    }
    return rows;
  }

  double to_double(const std::string& key, const std::string& s) const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) fail(key, "expected a number, got '" + s + "'");
    return v;
  }
  std::uint64_t to_uint(const std::string& key, const std::string& s) const {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      fail(key, "expected a nonnegative integer, got '" + s + "'");
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      fail(key, "integer out of range: '" + s + "'");
    }
  }

  std::string inner(const std::string& key, const std::string& v) const {
    const std::string t = trim(v);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') fail(key, "expected [ ... ] array");
    return t.substr(1, t.size() - 2);
  }
  std::vector<double> parse_vector(const std::string& key, const std::string& v) const {
    std::vector<double> out;
    std::stringstream ss(inner(key, v));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      if (cell.empty()) fail(key, "empty array element");
      out.push_back(to_double(key, cell));
    }
    if (out.empty()) fail(key, "empty array");
    return out;
  }
  std::vector<std::string> words(const std::string& key) {
    std::vector<std::string> out;
    std::stringstream ss(inner(key, require(key).value));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      if (!cell.empty()) out.push_back(cell);
    }
    return out;
  }

  void reject_unused() const {
    auto s = doc_.sections.find(name_);
    if (s == doc_.sections.end()) return;
    for (const auto& [k, e] : s->second) {
      if (!e.used) throw ConfigError(e.line, path(k), "unknown field");
    }
  }

 private:
  Document& doc_;
  std::string name_;
};

void check_increasing(Section& sec, const std::vector<double>& betas) {
  if (betas.size() < 1) sec.fail("betas", "need at least one inverse temperature");
  for (std::size_t i = 1; i < betas.size(); ++i) {
    if (!(betas[i] > betas[i - 1])) {
      sec.fail("betas", "must be strictly increasing (entry " + std::to_string(i) + ")");
    }
  }
  for (double b : betas) {
    if (!(b > 0.0)) sec.fail("betas", "must be positive");
  }
}

IntegralOperator markov_from(Section& sec, const std::string& key, const SpaceRef& src,
                             const SpaceRef& dst) {
  const auto rows = sec.matrix(key);
  if (rows.size() != src->size() || rows[0].size() != dst->size()) {
    sec.fail(key, "expected a " + std::to_string(src->size()) + "x" + std::to_string(dst->size()) +
                      " matrix");
  }
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (rows[i][j] < 0.0) sec.fail(key, "negative entry in row " + std::to_string(i));
      m(i, j) = rows[i][j];
      sum += rows[i][j];
    }
    if (std::abs(sum - 1.0) > kStochasticTol) {
      sec.fail(key, "row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", not 1");
    }
    m.row(i) /= sum;
  }
  return IntegralOperator::markov(src, dst, m, kStochasticTol);
}

Eigen::VectorXd vector_of(Section& sec, const std::string& key, std::size_t size) {
  const auto v = sec.vector(key);
  if (v.size() != size) sec.fail(key, "expected " + std::to_string(size) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Measure probability_of(Section& sec, const std::string& key, const SpaceRef& s) {
  Eigen::VectorXd w = vector_of(sec, key, s->size());
  if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > kStochasticTol) {
    sec.fail(key, "not a probability vector");
  }
  return Measure::probability(s, w / w.sum(), kStochasticTol);
}

ModelSpec build_fk(Section& sec) {
  const std::string kernel_name = sec.str("kernel", "mh");
  FkKernel kernel;
  if (kernel_name == "mh") {
    kernel = FkKernel::kMetropolisHastings;
  } else if (kernel_name == "direct") {
    kernel = FkKernel::kDirect;
  } else {
    sec.fail("kernel", "expected mh or direct");
  }
  const std::string preset = sec.str("preset", "");
  if (preset == "toy") {
    const double p = sec.number("p");
    if (!(p > 0.0 && p < 1.0)) sec.fail("p", "must lie in (0, 1)");
    const auto betas = sec.vector("betas");
    check_increasing(sec, betas);
    return toy_fk_model(p, betas, kernel);
  }
  if (!preset.empty()) sec.fail("preset", "unknown fk preset '" + preset + "'");

  const auto sizes = sec.vector("sizes");
  std::vector<SpaceRef> spaces;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l] != std::floor(sizes[l])) sec.fail("sizes", "sizes must be positive integers");
    spaces.push_back(FiniteSpace::make("S'" + std::to_string(l), static_cast<std::size_t>(sizes[l])));
  }
  const std::size_t L = spaces.size() - 1;
  Measure initial = probability_of(sec, "initial", spaces[0]);
  IntegralOperator m0 = markov_from(sec, "level0_kernel", spaces[0], spaces[0]);
  std::vector<IntegralOperator> transitions;
  std::vector<TestFunction> potentials;
  for (std::size_t l = 1; l <= L; ++l) {
    transitions.push_back(markov_from(sec, "transition_" + std::to_string(l), spaces[l - 1], spaces[l]));
  }
  for (std::size_t l = 0; l < L; ++l) {
    const std::string key = "potential_" + std::to_string(l);
    Eigen::VectorXd g = vector_of(sec, key, spaces[l]->size());
    if ((g.array() <= 0.0).any() || (g.array() > 1.0).any()) sec.fail(key, "potential must lie in (0, 1]");
    potentials.emplace_back(spaces[l], g);
  }
  try {
    return FKModel(spaces, initial, m0, transitions, potentials, kernel);
  } catch (const InvalidArgument& e) {
    throw ConfigError(0, "model", e.what());
  }
}

ModelSpec build_annealing(Section& sec) {
  const double eps = sec.number("epsilon");
  if (!(eps >= 0.0 && eps < 1.0)) sec.fail("epsilon", "must lie in [0, 1)");
  const std::string preset = sec.str("preset", "");
  if (preset == "annealing4") {
    if (sec.has("betas")) {
      const auto betas = sec.vector("betas");
      check_increasing(sec, betas);
      return annealing4_model(eps, betas);
    }
    return annealing4_model(eps);
  }
  if (!preset.empty()) sec.fail("preset", "unknown annealing preset '" + preset + "'");
  const auto energy = sec.vector("energy");
  auto space = FiniteSpace::make("S", energy.size());
  const auto betas = sec.vector("betas");
  check_increasing(sec, betas);
  std::optional<Measure> reference;
  if (sec.has("reference")) reference = probability_of(sec, "reference", space);
  const auto pk = markov_from(sec, "proposal_k", space, space);
  const auto pl = markov_from(sec, "proposal_l", space, space);
  try {
    return AnnealingModel::with_metropolis(
        space, TestFunction(space, vector_of(sec, "energy", energy.size())), betas, eps, pk, pl,
        reference);
  } catch (const InvalidArgument& e) {
    throw ConfigError(0, "model", e.what());
  }
}

ModelSpec build_chain(Section& sec) {
  const auto rows = sec.matrix("matrix");
  auto space = FiniteSpace::make("S", rows.size());
  try {
    return homogeneous_chain(markov_from(sec, "matrix", space, space));
  } catch (const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(sec.line("matrix"), sec.path("matrix"), e.what());
  }
}

}  // namespace

TestFunction terminal_indicator(const ModelSpec& model, std::size_t l, const std::string& label) {
  const SpaceRef& base = terminal_space(model, l);
  const auto& labels = base->labels();
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    throw InvalidArgument("terminal_indicator: no state '" + label + "' in " + base->id());
  }
  const auto target = static_cast<std::size_t>(it - labels.begin());
  const SpaceRef& space = level_space(model, l);
  Eigen::VectorXd v(static_cast<Eigen::Index>(space->size()));
  for (std::size_t x = 0; x < space->size(); ++x) v(x) = terminal_state(model, l, x) == target ? 1.0 : 0.0;
  return TestFunction(space, v);
}

EngineConfig RunConfig::engine() const {
  EngineConfig c;
  c.model = model;
  c.levels = levels;
  c.iterations = checkpoints.empty() ? iterations : checkpoints.back();
  c.seed = seed;
  return c;
}

std::string config_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text) {
  Document doc = tokenize(text);
  RunConfig cfg;
  cfg.hash = config_hash(text);

  Section model(doc, "model");
  const std::string type = model.str("type");
  ModelSpec spec = [&]() -> ModelSpec {
    if (type == "fk") return build_fk(model);
    if (type == "annealing") return build_annealing(model);
    if (type == "chain") return build_chain(model);
    model.fail("type", "expected fk, annealing or chain");
  }();
  model.reject_unused();
  cfg.model = std::make_shared<const ModelSpec>(std::move(spec));
  const std::size_t model_top = model_levels(*cfg.model);

  Section engine(doc, "engine");
  cfg.levels = engine.integer("levels", model_top);
  if (cfg.levels > model_top) {
    engine.fail("levels", "model has only " + std::to_string(model_top) + " levels above 0");
  }
  cfg.iterations = engine.integer("iterations", 0);
  cfg.seed = engine.integer("seed", 0);
  cfg.replicates = engine.integer("replicates", 2);
  cfg.workers = engine.integer("workers", 0);
  if (engine.has("checkpoints")) {
    for (double v : engine.vector("checkpoints")) {
      if (v < 1 || v != std::floor(v)) engine.fail("checkpoints", "checkpoints must be positive integers");
      cfg.checkpoints.push_back(static_cast<std::size_t>(v));
    }
    if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end()) ||
        std::adjacent_find(cfg.checkpoints.begin(), cfg.checkpoints.end()) != cfg.checkpoints.end()) {
      engine.fail("checkpoints", "must be strictly increasing");
    }
    if (cfg.iterations != 0 && cfg.iterations != cfg.checkpoints.back()) {
      engine.fail("iterations", "must equal the last checkpoint when both are given");
    }
    cfg.iterations = cfg.checkpoints.back();
  } else {
    if (cfg.iterations == 0) engine.fail("iterations", "missing (or give checkpoints)");
    cfg.checkpoints = {cfg.iterations};
  }
  engine.reject_unused();

  Section functions(doc, "functions");
  for (const auto& key : doc.function_keys) {
    const auto at = key.find('@');
    if (at == std::string::npos) functions.fail(key, "function key must be name@level");
    const std::string name = trim(key.substr(0, at));
    const std::uint64_t level = functions.to_uint(key, trim(key.substr(at + 1)));
    if (name.empty() || name.find(',') != std::string::npos) functions.fail(key, "bad function name");
    if (level > cfg.levels) functions.fail(key, "level above engine.levels");
    const std::string value = functions.str(key);
    const SpaceRef& space = level_space(*cfg.model, level);
    if (value.rfind("terminal_indicator(", 0) == 0 && value.back() == ')') {
      const std::string label = trim(value.substr(19, value.size() - 20));
      try {
        cfg.functions.push_back({name, level, terminal_indicator(*cfg.model, level, label)});
      } catch (const InvalidArgument& e) {
        functions.fail(key, e.what());
      }
    } else {
      const auto v = functions.parse_vector(key, value);
      if (v.size() != space->size()) {
        functions.fail(key, "expected " + std::to_string(space->size()) + " values");
      }
      cfg.functions.push_back(
          {name, level, TestFunction(space, Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()))});
    }
    for (std::size_t i = 0; i + 1 < cfg.functions.size(); ++i) {
      if (cfg.functions[i].name == name && cfg.functions[i].level == level) {
        functions.fail(key, "duplicate function");
      }
    }
  }
  if (cfg.functions.empty()) {
    const std::string first = terminal_space(*cfg.model, 0)->label(0);
    for (std::size_t l = 0; l <= cfg.levels; ++l) {
      cfg.functions.push_back({"terminal_indicator(" + first + ")", l,
                               terminal_indicator(*cfg.model, l, first)});
    }
  }

  Section verify(doc, "verify");
  cfg.c_bias = verify.number("c_bias", 1.0);
  if (cfg.c_bias < 0.0) verify.fail("c_bias", "must be nonnegative");
  cfg.normality_threshold = verify.number("normality_threshold", 0.0);
  if (verify.has("cross")) {
    for (const auto& pair : verify.words("cross")) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) verify.fail("cross", "expected name:name pairs");
      // name or name@level; a bare name must be unambiguous.
      auto index_of = [&](const std::string& n) {
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < cfg.functions.size(); ++i) {
          const auto& f = cfg.functions[i];
          if (f.name == n || f.name + "@" + std::to_string(f.level) == n) hits.push_back(i);
        }
        if (hits.empty()) verify.fail("cross", "unknown function '" + n + "'");
        if (hits.size() > 1) verify.fail("cross", "ambiguous function '" + n + "', use name@level");
        return hits[0];
      };
      const auto a = index_of(trim(pair.substr(0, colon)));
      const auto b = index_of(trim(pair.substr(colon + 1)));
      if (a == b) verify.fail("cross", "pair needs two different functions");
      cfg.cross_pairs.emplace_back(a, b);
    }
  }
  verify.reject_unused();

  Section output(doc, "output");
  cfg.output_dir = output.str("dir", ".");
  output.reject_unused();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace imcmc
