#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "bisim/config.hpp"
#include "bisim/errors.hpp"
#include "bisim/io.hpp"
#include "bisim/metric.hpp"

using namespace bisim;

TEST_CASE("MDP JSON round-trips exactly") {
  const FiniteMdp m = make_random_mdp(5, 3, 0.93, 12);
  const io::Json j = io::mdp_to_json(m, {{"generator", "random"}, {"seed", 12}});
  CHECK(j["metadata"]["seed"] == 12);
  CHECK(io::mdp_from_json(io::Json::parse(j.dump())) == m);

  const auto path = std::filesystem::temp_directory_path() / "bisim_io_test_mdp.json";
  io::save_mdp(path, m);
  CHECK(io::load_mdp(path) == m);
  std::filesystem::remove(path);
}

TEST_CASE("malformed MDP documents are rejected") {
  io::Json j = io::mdp_to_json(make_chain_example());
  j["transitions"][0][0][1] = 0.5;
  CHECK_THROWS_AS(io::mdp_from_json(j), PreconditionError);
  j = io::mdp_to_json(make_chain_example());
  j["rewards"].erase(0);
  CHECK_THROWS_AS(io::mdp_from_json(j), StructuralError);
  j = io::mdp_to_json(make_chain_example());
  j.erase("gamma");
  CHECK_THROWS_AS(io::mdp_from_json(j), StructuralError);
}

TEST_CASE("metric CSV round-trips exactly") {
  const Matrix d = solve_metric(make_random_mdp(4, 2, 0.9, 3)).final;
  const std::string csv = io::metric_to_csv(d);
  CHECK(csv.rfind("4\n", 0) == 0);
  CHECK(io::metric_from_csv(csv) == d);
  CHECK(io::matrix_from_json(io::matrix_to_json(d)) == d);
  CHECK_THROWS_AS(io::metric_from_csv("3\n1,2,3\n"), StructuralError);
}

TEST_CASE("residual and value CSVs") {
  CHECK(io::residuals_to_csv({0.5, 0.25}) == "iteration,residual\n1,0.5\n2,0.25\n");
  CHECK(io::values_to_csv({1.5, 2.0}, {0, 1}) == "state,value,action\n0,1.5,0\n1,2,1\n");
}

TEST_CASE("config defaults and overrides") {
  const ExperimentConfig c = parse_config("suite = \"composition\"\n");
  CHECK(c.suite == Suite::Composition);
  CHECK(c.environment == Environment::Grid);
  CHECK(c.grid_side == 5);
  CHECK(c.slip == 0.07);
  CHECK(c.gamma == 0.95);
  CHECK(c.adversarial.iterations == 1000);

  const ExperimentConfig o = parse_config(R"(
# comment
suite = "compression_sweep"   # trailing comment
environment = "random"
random_states = 7
gamma = 0.8
epsilons = [0.1, 0.5, 2]
seeds = [3, 1]
output_dir = "out # not a comment"
adversarial_iterations = 20
adversarial_objective = "value_loss"
)");
  CHECK(o.environment == Environment::Random);
  CHECK(o.random_states == 7);
  CHECK(o.epsilons == std::vector<double>{0.1, 0.5, 2.0});
  CHECK(o.seeds == std::vector<std::uint64_t>{3, 1});
  CHECK(o.output_dir == "out # not a comment");
  CHECK(o.adversarial.iterations == 20);
  CHECK(o.adversarial.objective == "value_loss");
  CHECK(o.to_json()["adversarial"]["iterations"] == 20);
}

TEST_CASE("config errors name the offending key") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("suite = \"nope\"").find("'suite'") != std::string::npos);
  CHECK(message("bogus = 1").find("'bogus'") != std::string::npos);
  CHECK(message("gamma = 1.5").find("'gamma'") != std::string::npos);
  CHECK(message("epsilons = [0.5, 0.1]").find("'epsilons'") != std::string::npos);
  CHECK(message("grid_side = 2.5").find("'grid_side'") != std::string::npos);
  CHECK(message("slip = \"x\"").find("'slip'") != std::string::npos);
  CHECK(message("slip = 0.1\nslip = 0.2").find("'slip'") != std::string::npos);
  CHECK(message("environment = \"file\"").find("'mdp_file'") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("suite names round-trip") {
  CHECK(all_suites().size() == 10);
  for (Suite s : all_suites()) CHECK(suite_from_string(to_string(s)) == s);
}
