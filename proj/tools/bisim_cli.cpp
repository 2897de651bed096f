// bisim: behavioural metrics, quotients and experiment suites for finite MDPs.
//
// Exit codes: 0 success, 1 an invariant check failed, 2 usage or input error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "bisim/adversarial.hpp"
#include "bisim/config.hpp"
#include "bisim/errors.hpp"
#include "bisim/io.hpp"
#include "bisim/logic.hpp"
#include "bisim/metric.hpp"
#include "bisim/planning.hpp"
#include "bisim/quotient.hpp"
#include "bisim/suites.hpp"

namespace {

using bisim::io::Json;

constexpr int kOk = 0;
constexpr int kFinding = 1;
constexpr int kUsage = 2;

void print_matrix(const bisim::Matrix& d) {
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) std::printf(j ? " %.10f" : "%.10f", d(i, j));
    std::printf("\n");
  }
}

void print_vector(const char* name, const std::vector<double>& v) {
  std::printf("%s:", name);
  for (double x : v) std::printf(" %.10f", x);
  std::printf("\n");
}

struct MetricArgs {
  std::string mdp;
  double tol = bisim::kDefaultMetricTolerance;
  unsigned threads = 1;
  std::string out;
  bool json = false;
};

int cmd_metric(const MetricArgs& a) {
  const bisim::FiniteMdp m = bisim::io::load_mdp(a.mdp);
  bisim::MetricOptions options;
  options.tolerance = a.tol;
  options.threads = a.threads;
  const bisim::MetricRun run = bisim::solve_metric(m, options);
  if (!a.out.empty()) bisim::io::write_text(a.out, bisim::io::metric_to_csv(run.final));
  if (a.json) {
    Json j;
    j["d_m"] = bisim::io::matrix_to_json(run.final);
    j["iterations"] = run.iterations;
    j["certified_error"] = run.certified_error;
    std::cout << j.dump(2) << "\n";
  } else {
    print_matrix(run.final);
    std::fprintf(stderr, "iterations %zu, certified error %.3g\n", run.iterations,
                 run.certified_error);
  }
  const auto check = bisim::check_pseudometric(run.final);
  if (!check.ok) {
    std::fprintf(stderr, "pseudometric check failed: triangle excess %.3g\n",
                 check.max_triangle_excess);
    return kFinding;
  }
  return kOk;
}

int cmd_quotient(const MetricArgs& a, double eps) {
  const bisim::FiniteMdp m = bisim::io::load_mdp(a.mdp);
  const bisim::Matrix d = bisim::solve_metric(m, a.tol).final;
  const bisim::EpsilonQuotient q = bisim::make_quotient(d, eps);
  if (a.json) {
    std::cout << bisim::io::quotient_to_json(q).dump(2) << "\n";
    return kOk;
  }
  std::printf("classes: %zu\n", q.class_count());
  for (std::size_t c = 0; c < q.class_members.size(); ++c) {
    std::printf("  %zu:", c);
    for (auto s : q.class_members[c]) std::printf(" %zu", s);
    std::printf("\n");
  }
  std::printf("d_q:\n");
  print_matrix(q.d_q);
  return kOk;
}

int cmd_plan(const MetricArgs& a, double eps) {
  const bisim::FiniteMdp m = bisim::io::load_mdp(a.mdp);
  const bisim::ValueLossReport r = bisim::value_loss_report(m, eps, {a.tol, a.tol});
  if (a.json) {
    Json j = bisim::io::value_loss_to_json(r);
    j["v_star"] = r.v_star;
    j["v_lifted"] = r.v_lifted;
    std::cout << j.dump(2) << "\n";
  } else {
    print_vector("v_star", r.v_star);
    print_vector("v_lifted", r.v_lifted);
    std::printf("classes %zu, value_loss %.10f, bound_eps %.10f, bound_diam %.10f\n", r.classes,
                r.loss, r.bound_eps, r.bound_diam);
  }
  if (!r.within_eps_bound)
    std::fprintf(stderr, "note: loss exceeds 2 eps / (1 - gamma)\n");
  return r.within_diam_bound ? kOk : kFinding;
}

struct LogicArgs {
  std::string mdp;
  std::string formula;
  std::string probe;
  std::uint64_t seed = 0;
  std::size_t count = 500;
  std::size_t s1 = 0, s2 = 1, depth = 10;
};

int cmd_logic(const LogicArgs& a) {
  namespace lg = bisim::logic;
  const bisim::FiniteMdp m = bisim::io::load_mdp(a.mdp);
  if (!a.formula.empty()) {
    const lg::FormulaPtr f = lg::parse_sexpr(bisim::io::read_text(a.formula));
    print_vector("values", lg::eval_formula(m, f));
    return kOk;
  }
  const bisim::Matrix d = bisim::solve_metric(m, 1e-10).final;
  if (a.probe == "soundness") {
    const lg::SoundnessReport r = lg::soundness_probe(m, d, a.seed, a.count);
    std::printf("formulas %zu, pairs %zu, violations %zu, max excess %.3g\n", r.formulas,
                r.pairs_checked, r.violations, r.max_excess);
    if (!r.ok) std::printf("worst formula: %s\n", r.worst_formula.c_str());
    return r.ok ? kOk : kFinding;
  }
  if (a.probe == "completeness") {
    if (a.s1 >= m.n_states() || a.s2 >= m.n_states())
      throw bisim::PreconditionError("state index out of range");
    const lg::CompletenessProbe r = lg::completeness_probe(m, d, a.s1, a.s2, a.depth);
    std::printf("d_M %.10f, lower bound %.10f, gap %.3g\n", d(a.s1, a.s2), r.lower_bound, r.gap);
    return kOk;
  }
  throw CLI::ValidationError("logic", "give --formula or --probe soundness|completeness");
}

int report_suite(const bisim::SuiteReport& r) {
  std::size_t failed = 0;
  for (const auto& c : r.checks) {
    if (c.passed) continue;
    ++failed;
    std::fprintf(stderr, "FAIL %s: %.6g vs %.6g %s\n", c.name.c_str(), c.value, c.threshold,
                 c.detail.c_str());
  }
  std::printf("%s: %zu checks, %zu failed\n", bisim::to_string(r.suite), r.checks.size(), failed);
  return failed ? kFinding : kOk;
}

int cmd_suite(const std::string& config_path, const std::string& output) {
  bisim::ExperimentConfig config = bisim::load_config(config_path);
  if (!output.empty()) config.output_dir = output;
  const bisim::SuiteReport r = bisim::run_suite_to_disk(config);
  std::printf("wrote %s\n", (config.output_dir / bisim::to_string(config.suite)).c_str());
  return report_suite(r);
}

struct GenerateArgs {
  std::string kind = "chain";
  std::string out;
  std::size_t side = 5, states = 6, actions = 2;
  double slip = 0.07, gamma = 0.95;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  bisim::ExperimentConfig c;
  c.grid_side = a.side;
  c.slip = a.slip;
  c.gamma = a.gamma;
  c.random_states = a.states;
  c.random_actions = a.actions;
  if (a.kind == "chain") c.environment = bisim::Environment::Chain;
  else if (a.kind == "grid") c.environment = bisim::Environment::Grid;
  else c.environment = bisim::Environment::Random;
  const bisim::FiniteMdp m = bisim::make_environment(c, a.seed);
  bisim::require_valid(m);
  const Json meta = {{"generator", a.kind}, {"seed", a.seed}};
  if (a.out.empty()) std::cout << bisim::io::mdp_to_json(m, meta).dump(2) << "\n";
  else bisim::io::save_mdp(a.out, m, meta);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioural metrics and epsilon-quotients of finite MDPs"};
  app.require_subcommand(1);

  MetricArgs metric_args;
  double eps = 0.0;
  auto add_mdp = [&](CLI::App* sub) {
    sub->add_option("--mdp", metric_args.mdp, "MDP JSON file")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--tol", metric_args.tol, "metric tolerance")->check(CLI::PositiveNumber);
    sub->add_flag("--json", metric_args.json, "print JSON");
  };

  auto* metric = app.add_subcommand("metric", "compute the behavioural metric d_M");
  add_mdp(metric);
  metric->add_option("--threads", metric_args.threads)->check(CLI::Range(1u, 256u));
  metric->add_option("-o,--out", metric_args.out, "also write d_M as CSV");

  auto* quotient = app.add_subcommand("quotient", "epsilon-quotient of the metric");
  add_mdp(quotient);
  quotient->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);

  auto* plan = app.add_subcommand("plan", "value iteration and abstraction value loss");
  add_mdp(plan);
  plan->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);

  LogicArgs logic_args;
  auto* logic = app.add_subcommand("logic", "evaluate a formula or run logic probes");
  logic->add_option("--mdp", logic_args.mdp)->required()->check(CLI::ExistingFile);
  auto* formula_opt =
      logic->add_option("--formula", logic_args.formula, "S-expression formula file")
          ->check(CLI::ExistingFile);
  logic->add_option("--probe", logic_args.probe)
      ->check(CLI::IsMember({"soundness", "completeness"}))
      ->excludes(formula_opt);
  logic->add_option("--seed", logic_args.seed);
  logic->add_option("--count", logic_args.count);
  logic->add_option("--s1", logic_args.s1);
  logic->add_option("--s2", logic_args.s2);
  logic->add_option("--depth", logic_args.depth);

  std::string config_path, output;
  auto* suite = app.add_subcommand("suite", "run an experiment suite from a config file");
  suite->add_option("-c,--config", config_path)->required();
  suite->add_option("-o,--output", output, "override output_dir");

  auto* adversarial = app.add_subcommand("adversarial", "differential-evolution reward search");
  std::string adv_config;
  std::uint64_t adv_seed = 0;
  std::size_t adv_iterations = 0;
  adversarial->add_option("-c,--config", adv_config, "config file (adversarial_* keys)");
  adversarial->add_option("--seed", adv_seed);
  adversarial->add_option("--iterations", adv_iterations, "override generation count");
  adversarial->add_option("-o,--output", output, "override output_dir");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a chain, grid or random MDP");
  generate->add_option("kind", gen.kind)->check(CLI::IsMember({"chain", "grid", "random"}));
  generate->add_option("-o,--out", gen.out);
  generate->add_option("--side", gen.side);
  generate->add_option("--slip", gen.slip)->check(CLI::Range(0.0, 1.0));
  generate->add_option("--gamma", gen.gamma);
  generate->add_option("--states", gen.states);
  generate->add_option("--actions", gen.actions);
  generate->add_option("--seed", gen.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*metric) return cmd_metric(metric_args);
    if (*quotient) return cmd_quotient(metric_args, eps);
    if (*plan) return cmd_plan(metric_args, eps);
    if (*logic) return cmd_logic(logic_args);
    if (*suite) return cmd_suite(config_path, output);
    if (*generate) return cmd_generate(gen);
    if (*adversarial) {
      bisim::ExperimentConfig config =
          adv_config.empty() ? bisim::ExperimentConfig{} : bisim::load_config(adv_config);
      config.suite = bisim::Suite::Adversarial;
      config.seeds = {adv_seed};
      if (adv_iterations) config.adversarial.iterations = adv_iterations;
      if (!output.empty()) config.output_dir = output;
      return report_suite(bisim::run_suite_to_disk(config));
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const bisim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
