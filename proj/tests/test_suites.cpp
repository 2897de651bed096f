#include <doctest.h>

#include <filesystem>

#include "bisim/adversarial.hpp"
#include "bisim/config.hpp"
#include "bisim/io.hpp"
#include "bisim/suites.hpp"

using namespace bisim;

namespace {

ExperimentConfig small(Suite suite) {
  ExperimentConfig c;
  c.suite = suite;
  c.grid_side = 3;
  c.gamma = 0.9;
  c.scaling_sides = {2, 3};
  c.adversarial.states = 3;
  c.adversarial.actions = 2;
  c.adversarial.iterations = 3;
  return c;
}

const InvariantCheck* find(const SuiteReport& r, const std::string& prefix) {
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("every suite runs and passes on a small grid") {
  for (Suite s : all_suites()) {
    CAPTURE(to_string(s));
    const SuiteReport r = run_suite(small(s));
    CHECK(r.passed());
    CHECK_FALSE(r.checks.empty());
    CHECK(r.to_json()["config"]["suite"] == to_string(s));
    CHECK(r.timings.contains("total"));
  }
}

TEST_CASE("suites on the same base MDP report identical summary rows") {
  io::Json first;
  for (Suite s : {Suite::MetricBaseline, Suite::Composition, Suite::BackwardStability,
                  Suite::CompressionSweep, Suite::InfoTheory, Suite::Spectral,
                  Suite::PerturbSweep}) {
    const io::Json row = run_suite(small(s)).rows.at(0);
    if (first.is_null()) first = row;
    CHECK(row.at("array_mean") == first.at("array_mean"));
    CHECK(row.at("array_std") == first.at("array_std"));
  }
}

TEST_CASE("composition on the chain has zero drift") {
  ExperimentConfig c = small(Suite::Composition);
  c.environment = Environment::Chain;
  c.epsilons = {0.95};
  const SuiteReport r = run_suite(c);
  const InvariantCheck* check = find(r, "idempotence");
  REQUIRE(check);
  CHECK(check->passed);
  CHECK(check->value <= 1e-9);
}

TEST_CASE("transfer test perturbs slip and stays a pseudometric") {
  const SuiteReport r = run_suite(small(Suite::TransferTest));
  CHECK(r.passed());
  const io::Json& row = r.rows.at(1);
  CHECK(row.at("perturbed_slip") == 0.10);
  CHECK(row.contains("mean_delta"));
  ExperimentConfig c = small(Suite::TransferTest);
  c.environment = Environment::Chain;
  CHECK_THROWS_AS(run_suite(c), ConfigError);
}

TEST_CASE("random environments fan out over sorted seeds") {
  ExperimentConfig c = small(Suite::MetricBaseline);
  c.environment = Environment::Random;
  c.seeds = {4, 2};
  const SuiteReport r = run_suite(c);
  CHECK(r.rows.at(0).at("instance") == "seed2");
  CHECK(r.passed());
}

TEST_CASE("reports on disk are deterministic") {
  const auto root = std::filesystem::temp_directory_path() / "bisim_suite_test";
  std::filesystem::remove_all(root);
  ExperimentConfig c = small(Suite::CompressionSweep);
  c.output_dir = root / "a";
  run_suite_to_disk(c);
  c.output_dir = root / "b";
  run_suite_to_disk(c);
  const auto a = root / "a" / "compression_sweep";
  const auto b = root / "b" / "compression_sweep";
  for (const char* f : {"d_m.csv", "residuals.csv", "v_star.csv"})
    CHECK(io::read_text(a / f) == io::read_text(b / f));
  // The echo contains output_dir, so compare everything else.
  io::Json ja = io::Json::parse(io::read_text(a / "report.json"));
  io::Json jb = io::Json::parse(io::read_text(b / "report.json"));
  ja["config"].erase("output_dir");
  jb["config"].erase("output_dir");
  CHECK(ja == jb);
  CHECK(std::filesystem::exists(a / "metadata.json"));
  std::filesystem::remove_all(root);
}

TEST_CASE("unwritable output directories are reported") {
  ExperimentConfig c = small(Suite::MetricBaseline);
  c.output_dir = "/proc/bisim_cannot_write_here";
  CHECK_THROWS_AS(run_suite_to_disk(c), std::runtime_error);
}

TEST_CASE("adversarial search sanity runs") {
  AdversarialConfig a;
  a.states = 3;
  a.actions = 1;
  a.iterations = 5;
  const AdversarialResult single = adversarial_search(a, 1, {}, make_objective("value_loss", 0.1));
  CHECK(single.best_objective <= 1e-7);
  CHECK(single.invariants.ok);

  a.actions = 2;
  a.objective = "constant";
  const AdversarialResult flat = adversarial_search(a, 1);
  CHECK(flat.best_objective == 0.0);
  CHECK(flat.invariants.ok);
  CHECK(flat.population == 90);
  CHECK(flat.evaluations == 90 * 6);
  CHECK(flat.objective_trace.size() == 6);
  for (double r : flat.worst_rewards.data()) CHECK(std::abs(r) <= 10.0);

  const AdversarialResult again = adversarial_search(a, 1);
  CHECK(again.worst_rewards == flat.worst_rewards);
  CHECK_THROWS_AS(make_objective("nope", 0.1), ConfigError);
}

TEST_CASE("objective trace never decreases") {
  AdversarialConfig a;
  a.states = 3;
  a.actions = 2;
  a.iterations = 8;
  a.objective = "value_loss";
  a.epsilon_fraction = 0.4;
  const AdversarialResult r = adversarial_search(a, 3);
  for (std::size_t g = 1; g < r.objective_trace.size(); ++g)
    CHECK(r.objective_trace[g] >= r.objective_trace[g - 1]);
  CHECK(r.invariants.ok);
}
