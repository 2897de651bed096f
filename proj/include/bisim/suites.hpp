#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bisim/config.hpp"
#include "bisim/mdp.hpp"

namespace bisim {

struct InvariantCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< observed quantity
  double threshold = 0.0;  ///< limit it was compared against
  std::string detail;
};

struct SuiteReport {
  Suite suite = Suite::MetricBaseline;
  nlohmann::json config;                    ///< full config echo
  nlohmann::json rows = nlohmann::json::array();
  std::vector<InvariantCheck> checks;
  /// Wall-clock milliseconds per stage. Kept out of to_json() so that
  /// report.json is byte-identical across runs.
  nlohmann::json timings = nlohmann::json::object();
  /// Extra artifacts: file name relative to the suite directory, contents.
  std::vector<std::pair<std::string, std::string>> files;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// The MDP described by the environment fields of `config`.
FiniteMdp make_environment(const ExperimentConfig& config, std::uint64_t seed);

/// Runs one suite in memory. Throws ConfigError for fields the suite cannot use.
SuiteReport run_suite(const ExperimentConfig& config);

/**
 * Writes report.json, metadata.json (timings) and the report's CSV files
 * into `dir`, creating it if needed. Throws std::runtime_error naming the
 * path when it is not writable.
 */
void write_report(const SuiteReport& report, const std::filesystem::path& dir);

/// run_suite, then write_report into config.output_dir / <suite name>.
SuiteReport run_suite_to_disk(const ExperimentConfig& config);

}  // namespace bisim
