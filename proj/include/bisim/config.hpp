#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bisim {

/// Invalid or unreadable experiment configuration. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Suite {
  MetricBaseline,
  TransferTest,
  Composition,
  BackwardStability,
  InfoTheory,
  Spectral,
  Scaling,
  CompressionSweep,
  PerturbSweep,
  Adversarial,
};

const char* to_string(Suite s);
Suite suite_from_string(const std::string& name);
const std::vector<Suite>& all_suites();

enum class Environment { Grid, Random, Chain, File };

const char* to_string(Environment e);

struct AdversarialConfig {
  std::size_t states = 4;
  std::size_t actions = 2;
  double gamma = 0.9;
  std::size_t iterations = 1000;
  double bound = 10.0;  ///< rewards searched in [-bound, bound]
  std::size_t population_per_dim = 15;
  std::size_t population_cap = 300;
  double mutation = 0.8;
  double crossover = 0.9;
  /// Quotient threshold as a fraction of the metric diameter.
  double epsilon_fraction = 0.1;
  std::string objective = "loss_minus_diam_bound";
  std::uint64_t mdp_seed = 0;
};

/// Flat experiment description. Every field has a documented default, so a
/// config file only needs `suite = "..."`.
struct ExperimentConfig {
  Suite suite = Suite::MetricBaseline;
  Environment environment = Environment::Grid;

  std::size_t grid_side = 5;
  double slip = 0.07;
  double perturbed_slip = 0.10;
  /// Defaults to the last cell.
  std::int64_t goal = -1;
  double goal_reward = 1.0;

  std::size_t random_states = 6;
  std::size_t random_actions = 2;
  std::string mdp_file;

  double gamma = 0.95;
  /// Sorted ascending. When empty, quotient suites use
  /// epsilon_fractions * diameter of the computed metric.
  std::vector<double> epsilons;
  std::vector<double> epsilon_fractions = {0.05, 0.1, 0.25, 0.5};
  std::vector<std::uint64_t> seeds = {0};

  double metric_tolerance = 1e-9;
  double value_tolerance = 1e-9;
  double drift_tolerance = 1e-9;
  std::size_t contraction_trials = 10;
  unsigned threads = 1;

  std::vector<std::size_t> scaling_sides = {5, 8};
  std::vector<double> perturb_scales = {0.001, 0.01, 0.1};

  AdversarialConfig adversarial;

  std::filesystem::path output_dir = "bisim_out";

  nlohmann::json to_json() const;
};

/**
 * Parses a flat TOML subset: `key = value` lines, `#` comments, strings in
 * double quotes, numbers, booleans and one-level arrays. Adversarial fields
 * use an `adversarial_` prefix. Unknown keys are errors. If output_dir is
 * absent, BISIM_OUTPUT_DIR is used when set.
 */
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace bisim
