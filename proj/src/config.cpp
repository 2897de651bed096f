#include "bisim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <concepts>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace bisim {

namespace {

using Json = nlohmann::json;

constexpr std::pair<Suite, const char*> kSuiteNames[] = {
    {Suite::MetricBaseline, "metric_baseline"},
    {Suite::TransferTest, "transfer_test"},
    {Suite::Composition, "composition"},
    {Suite::BackwardStability, "backward_stability"},
    {Suite::InfoTheory, "info_theory"},
    {Suite::Spectral, "spectral"},
    {Suite::Scaling, "scaling"},
    {Suite::CompressionSweep, "compression_sweep"},
    {Suite::PerturbSweep, "perturb_sweep"},
    {Suite::Adversarial, "adversarial"},
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

Json parse_scalar(const std::string& raw, const std::string& key) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("config key '" + key + "' has an empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("config key '" + key + "' has an unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size())
    throw ConfigError("config key '" + key + "' has an unparseable value '" + v + "'");
  return x;
}

Json parse_value(const std::string& raw, const std::string& key) {
  const std::string v = trim(raw);
  if (v.empty() || v.front() != '[') return parse_scalar(v, key);
  if (v.back() != ']') throw ConfigError("config key '" + key + "' has an unterminated array");
  Json arr = Json::array();
  const std::string body = v.substr(1, v.size() - 2);
  std::string item;
  bool in_string = false;
  for (char c : body) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      arr.push_back(parse_scalar(item, key));
      item.clear();
    } else {
      item += c;
    }
  }
  if (!trim(item).empty()) arr.push_back(parse_scalar(item, key));
  return arr;
}

class Fields {
 public:
  explicit Fields(std::map<std::string, Json> values) : values_(std::move(values)) {}

  template <class T>
  void read(const std::string& key, T& out) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    const Json v = it->second;
    values_.erase(it);
    assign(key, v, out);
  }

  void reject_unknown() const {
    if (!values_.empty()) throw ConfigError("unknown config key '" + values_.begin()->first + "'");
  }

 private:
  static double number(const std::string& key, const Json& v) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return v.get<double>();
  }
  static std::uint64_t count(const std::string& key, const Json& v) {
    const double x = number(key, v);
    if (x < 0 || std::floor(x) != x)
      throw ConfigError("config key '" + key + "' must be a nonnegative integer");
    return static_cast<std::uint64_t>(x);
  }
  static void assign(const std::string& key, const Json& v, double& out) { out = number(key, v); }
  template <std::unsigned_integral T>
  static void assign(const std::string& key, const Json& v, T& out) {
    out = static_cast<T>(count(key, v));
  }
  static void assign(const std::string& key, const Json& v, std::int64_t& out) {
    const double x = number(key, v);
    if (std::floor(x) != x) throw ConfigError("config key '" + key + "' must be an integer");
    out = static_cast<std::int64_t>(x);
  }
  static void assign(const std::string& key, const Json& v, std::string& out) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
    out = v.get<std::string>();
  }
  static void assign(const std::string& key, const Json& v, std::filesystem::path& out) {
    std::string s;
    assign(key, v, s);
    out = s;
  }
  template <class T>
  static void assign(const std::string& key, const Json& v, std::vector<T>& out) {
    if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
    out.clear();
    for (const auto& item : v) {
      T x{};
      assign(key, item, x);
      out.push_back(x);
    }
  }

  std::map<std::string, Json> values_;
};

}  // namespace

const char* to_string(Suite s) {
  for (const auto& [suite, name] : kSuiteNames)
    if (suite == s) return name;
  return "unknown";
}

Suite suite_from_string(const std::string& name) {
  for (const auto& [suite, n] : kSuiteNames)
    if (name == n) return suite;
  throw ConfigError("config key 'suite' names an unknown suite '" + name + "'");
}

const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> suites = [] {
    std::vector<Suite> v;
    for (const auto& entry : kSuiteNames) v.push_back(entry.first);
    return v;
  }();
  return suites;
}

const char* to_string(Environment e) {
  switch (e) {
    case Environment::Grid: return "grid";
    case Environment::Random: return "random";
    case Environment::Chain: return "chain";
    case Environment::File: return "file";
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, Json> values;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string content = trim(strip_comment(line));
    if (content.empty()) continue;
    if (content.front() == '[' && content.back() == ']')
      throw ConfigError("line " + std::to_string(lineno) + ": tables are not supported");
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    if (values.count(key)) throw ConfigError("config key '" + key + "' given twice");
    values[key] = parse_value(content.substr(eq + 1), key);
  }

  ExperimentConfig c;
  if (const char* env = std::getenv("BISIM_OUTPUT_DIR"); env && *env) c.output_dir = env;

  Fields f(std::move(values));
  std::string suite = "metric_baseline", environment = "grid";
  f.read("suite", suite);
  c.suite = suite_from_string(suite);
  f.read("environment", environment);
  if (environment == "grid") c.environment = Environment::Grid;
  else if (environment == "random") c.environment = Environment::Random;
  else if (environment == "chain") c.environment = Environment::Chain;
  else if (environment == "file") c.environment = Environment::File;
  else throw ConfigError("config key 'environment' must be grid, random, chain or file");

  f.read("grid_side", c.grid_side);
  f.read("slip", c.slip);
  f.read("perturbed_slip", c.perturbed_slip);
  f.read("goal", c.goal);
  f.read("goal_reward", c.goal_reward);
  f.read("random_states", c.random_states);
  f.read("random_actions", c.random_actions);
  f.read("mdp_file", c.mdp_file);
  f.read("gamma", c.gamma);
  f.read("epsilons", c.epsilons);
  f.read("epsilon_fractions", c.epsilon_fractions);
  f.read("seeds", c.seeds);
  f.read("metric_tolerance", c.metric_tolerance);
  f.read("value_tolerance", c.value_tolerance);
  f.read("drift_tolerance", c.drift_tolerance);
  f.read("contraction_trials", c.contraction_trials);
  f.read("threads", c.threads);
  f.read("scaling_sides", c.scaling_sides);
  f.read("perturb_scales", c.perturb_scales);
  f.read("output_dir", c.output_dir);

  auto& a = c.adversarial;
  f.read("adversarial_states", a.states);
  f.read("adversarial_actions", a.actions);
  f.read("adversarial_gamma", a.gamma);
  f.read("adversarial_iterations", a.iterations);
  f.read("adversarial_bound", a.bound);
  f.read("adversarial_population_per_dim", a.population_per_dim);
  f.read("adversarial_population_cap", a.population_cap);
  f.read("adversarial_mutation", a.mutation);
  f.read("adversarial_crossover", a.crossover);
  f.read("adversarial_epsilon_fraction", a.epsilon_fraction);
  f.read("adversarial_objective", a.objective);
  f.read("adversarial_mdp_seed", a.mdp_seed);
  f.reject_unknown();

  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string("config key '") + key + "' " + what);
  };
  require(c.grid_side > 0, "grid_side", "must be positive");
  require(c.slip >= 0 && c.slip <= 1, "slip", "must lie in [0,1]");
  require(c.perturbed_slip >= 0 && c.perturbed_slip <= 1, "perturbed_slip", "must lie in [0,1]");
  require(c.goal < static_cast<std::int64_t>(c.grid_side * c.grid_side), "goal",
          "must be a cell of the grid");
  require(c.gamma > 0 && c.gamma < 1, "gamma", "must lie in (0,1)");
  require(std::is_sorted(c.epsilons.begin(), c.epsilons.end()), "epsilons",
          "must be sorted ascending");
  require(std::all_of(c.epsilons.begin(), c.epsilons.end(), [](double e) { return e >= 0; }),
          "epsilons", "must be nonnegative");
  require(std::is_sorted(c.epsilon_fractions.begin(), c.epsilon_fractions.end()),
          "epsilon_fractions", "must be sorted ascending");
  require(!c.seeds.empty(), "seeds", "must not be empty");
  require(c.metric_tolerance > 0, "metric_tolerance", "must be positive");
  require(c.value_tolerance > 0, "value_tolerance", "must be positive");
  require(c.drift_tolerance > 0, "drift_tolerance", "must be positive");
  require(c.random_states > 0 && c.random_actions > 0, "random_states",
          "and random_actions must be positive");
  require(c.environment != Environment::File || !c.mdp_file.empty(), "mdp_file",
          "is required when environment = \"file\"");
  require(a.states > 0 && a.actions > 0, "adversarial_states",
          "and adversarial_actions must be positive");
  require(a.gamma > 0 && a.gamma < 1, "adversarial_gamma", "must lie in (0,1)");
  require(a.bound > 0, "adversarial_bound", "must be positive");
  require(a.mutation > 0 && a.mutation <= 2, "adversarial_mutation", "must lie in (0,2]");
  require(a.crossover >= 0 && a.crossover <= 1, "adversarial_crossover", "must lie in [0,1]");
  require(a.population_cap >= 4, "adversarial_population_cap", "must be at least 4");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

nlohmann::json ExperimentConfig::to_json() const {
  Json j;
  j["suite"] = to_string(suite);
  j["environment"] = to_string(environment);
  j["grid_side"] = grid_side;
  j["slip"] = slip;
  j["perturbed_slip"] = perturbed_slip;
  j["goal"] = goal;
  j["goal_reward"] = goal_reward;
  j["random_states"] = random_states;
  j["random_actions"] = random_actions;
  j["mdp_file"] = mdp_file;
  j["gamma"] = gamma;
  j["epsilons"] = epsilons;
  j["epsilon_fractions"] = epsilon_fractions;
  j["seeds"] = seeds;
  j["metric_tolerance"] = metric_tolerance;
  j["value_tolerance"] = value_tolerance;
  j["drift_tolerance"] = drift_tolerance;
  j["contraction_trials"] = contraction_trials;
  j["threads"] = threads;
  j["scaling_sides"] = scaling_sides;
  j["perturb_scales"] = perturb_scales;
  j["output_dir"] = output_dir.string();
  Json a;
  a["states"] = adversarial.states;
  a["actions"] = adversarial.actions;
  a["gamma"] = adversarial.gamma;
  a["iterations"] = adversarial.iterations;
  a["bound"] = adversarial.bound;
  a["population_per_dim"] = adversarial.population_per_dim;
  a["population_cap"] = adversarial.population_cap;
  a["mutation"] = adversarial.mutation;
  a["crossover"] = adversarial.crossover;
  a["strategy"] = "rand1bin";
  a["epsilon_fraction"] = adversarial.epsilon_fraction;
  a["objective"] = adversarial.objective;
  a["mdp_seed"] = adversarial.mdp_seed;
  j["adversarial"] = a;
  return j;
}

}  // namespace bisim
