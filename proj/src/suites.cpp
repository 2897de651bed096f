#include "bisim/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "bisim/adversarial.hpp"
#include "bisim/diagnostics.hpp"
#include "bisim/io.hpp"
#include "bisim/metric.hpp"
#include "bisim/planning.hpp"
#include "bisim/quotient.hpp"
#include "bisim/random.hpp"

namespace bisim {

using io::Json;

namespace {

constexpr double kContractionMargin = 1e-6;
constexpr double kSpectralTolerance = 1e-8;
constexpr double kPerturbSlack = 1e-7;

class Stopwatch {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x) { return io::format_double(x); }

class Builder {
 public:
  explicit Builder(const ExperimentConfig& config) : config_(config) {
    report_.suite = config.suite;
    report_.config = config.to_json();
  }

  void check(std::string name, bool passed, double value, double threshold,
             std::string detail = {}) {
    report_.checks.push_back({std::move(name), passed, value, threshold, std::move(detail)});
  }

  void check_pseudometric(const std::string& label, const Matrix& d) {
    const PseudoMetricCheck c = bisim::check_pseudometric(d);
    std::ostringstream detail;
    detail << "diag " << fmt(c.max_diagonal) << ", asym " << fmt(c.max_asymmetry) << ", min "
           << fmt(c.min_entry) << ", triangle " << fmt(c.max_triangle_excess);
    check("pseudometric[" + label + "]", c.ok, c.max_triangle_excess, kTriangleSlack,
          detail.str());
  }

  void row(Json r) { report_.rows.push_back(std::move(r)); }
  void time(const std::string& stage, double ms) { report_.timings[stage] = ms; }
  void file(std::string name, std::string contents) {
    report_.files.emplace_back(std::move(name), std::move(contents));
  }

  MetricOptions metric_options() const {
    MetricOptions o;
    o.tolerance = config_.metric_tolerance;
    o.threads = config_.threads;
    return o;
  }

  PlanningTolerances planning() const { return {config_.metric_tolerance, config_.value_tolerance}; }

  SuiteReport take() { return std::move(report_); }

 private:
  const ExperimentConfig& config_;
  SuiteReport report_;
};

Json metric_row(const Matrix& d, const MetricRun& run) {
  const SummaryStats stats = summary_stats(d);
  const SpectralReport spectral = spectral_report(d, SpectralMode::Raw);
  Json r = io::spectral_to_json(spectral);
  r.erase("eigenvalues");
  r.erase("mode");
  r["array_mean"] = stats.mean;
  r["array_std"] = stats.std;
  r["diameter"] = d.max_abs();
  r["iterations"] = run.iterations;
  r["certified_error"] = run.certified_error;
  return r;
}

std::vector<double> epsilon_list(const ExperimentConfig& config, const Matrix& d) {
  if (!config.epsilons.empty()) return config.epsilons;
  std::vector<double> out;
  for (double f : config.epsilon_fractions) out.push_back(f * d.max_abs());
  std::sort(out.begin(), out.end());
  return out;
}

struct Instance {
  std::uint64_t seed;
  std::string tag;  ///< suffix for file names and labels
  FiniteMdp mdp;
  MetricRun run;
};

std::vector<Instance> base_instances(const ExperimentConfig& config, Builder& b) {
  std::vector<std::uint64_t> seeds = config.seeds;
  if (seeds.empty()) seeds = {0};
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  if (config.environment != Environment::Random) seeds.resize(1);
  std::vector<Instance> out;
  for (std::uint64_t seed : seeds) {
    Stopwatch watch;
    Instance inst{seed, seeds.size() > 1 ? "seed" + std::to_string(seed) : "base",
                  make_environment(config, seed), {}};
    inst.run = solve_metric(inst.mdp, b.metric_options());
    b.time("metric[" + inst.tag + "]", watch.lap_ms());

    const std::string suffix = seeds.size() > 1 ? "_" + inst.tag : "";
    b.file("d_m" + suffix + ".csv", io::metric_to_csv(inst.run.final));
    b.file("residuals" + suffix + ".csv", io::residuals_to_csv(inst.run.residuals));

    Json r = metric_row(inst.run.final, inst.run);
    r["kind"] = "metric";
    r["instance"] = inst.tag;
    r["n_states"] = inst.mdp.n_states();
    r["n_actions"] = inst.mdp.n_actions();
    b.row(std::move(r));
    b.check_pseudometric(inst.tag, inst.run.final);

    const double bound = 2.0 * inst.mdp.reward_bound() / (1.0 - inst.mdp.gamma());
    b.check("bounded[" + inst.tag + "]", inst.run.final.max_abs() <= bound + kTriangleSlack,
            inst.run.final.max_abs(), bound, "diameter <= 2 R_max / (1 - gamma)");
    out.push_back(std::move(inst));
  }
  return out;
}

std::string label(const Instance& inst, double eps) {
  return inst.tag + ",eps=" + fmt(eps);
}

void metric_baseline(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    Stopwatch watch;
    const ContractionEstimate c = estimate_contraction(
        inst.mdp, config.contraction_trials, inst.seed, inst.run, config.metric_tolerance);
    b.time("contraction[" + inst.tag + "]", watch.lap_ms());
    const double gamma = inst.mdp.gamma();
    b.row({{"kind", "contraction"},
           {"instance", inst.tag},
           {"gamma", gamma},
           {"empirical_contraction", c.residual_ratio_factor},
           {"random_pair_contraction", c.random_pair_factor},
           {"pairs_used", c.pairs_used}});
    b.check("empirical_contraction[" + inst.tag + "]",
            c.residual_ratio_factor <= gamma + kContractionMargin, c.residual_ratio_factor,
            gamma + kContractionMargin, "geometric residual ratio of the Picard iteration");
    b.check("random_pair_contraction[" + inst.tag + "]",
            c.random_pair_factor <= gamma + kContractionMargin, c.random_pair_factor,
            gamma + kContractionMargin, std::to_string(c.pairs_used) + " pairs");
  }
}

void transfer_test(const ExperimentConfig& config, Builder& b) {
  if (config.environment != Environment::Grid)
    throw ConfigError("config key 'environment' must be \"grid\" for transfer_test");
  for (Instance& inst : base_instances(config, b)) {
    ExperimentConfig perturbed = config;
    perturbed.slip = config.perturbed_slip;
    Stopwatch watch;
    const FiniteMdp m2 = make_environment(perturbed, inst.seed);
    const MetricRun run2 = solve_metric(m2, b.metric_options());
    b.time("metric_perturbed[" + inst.tag + "]", watch.lap_ms());
    b.file("d_m_perturbed.csv", io::metric_to_csv(run2.final));

    const Matrix& d1 = inst.run.final;
    const Matrix& d2 = run2.final;
    Json r = metric_row(d2, run2);
    r["kind"] = "transfer";
    r["instance"] = inst.tag;
    r["slip"] = config.slip;
    r["perturbed_slip"] = config.perturbed_slip;
    r["mean_delta"] = summary_stats(d2).mean - summary_stats(d1).mean;
    r["sup_delta"] = sup_distance(d1, d2);
    b.row(std::move(r));
    b.check_pseudometric("perturbed," + inst.tag, d2);
  }
}

void composition(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    for (double eps : epsilon_list(config, inst.run.final)) {
      Stopwatch watch;
      const IdempotenceReport rep =
          idempotence_check(inst.mdp, inst.run.final, eps, config.drift_tolerance);
      b.time("idempotence[" + label(inst, eps) + "]", watch.lap_ms());
      Json r = io::idempotence_to_json(rep);
      r["kind"] = "composition";
      r["instance"] = inst.tag;
      b.row(std::move(r));
      b.check("idempotence[" + label(inst, eps) + "]", rep.ok, rep.drift, config.drift_tolerance,
              std::to_string(rep.classes) + " -> " + std::to_string(rep.requotient_classes) +
                  " classes");
    }
  }
}

void backward_stability(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    const std::size_t n = inst.mdp.n_states();
    for (double eps : epsilon_list(config, inst.run.final)) {
      Stopwatch watch;
      const EpsilonQuotient q = make_quotient(inst.run.final, eps);
      const Matrix pulled = pullback_metric(q, n);
      const EpsilonQuotient q2 = make_quotient(pulled, eps);
      const Matrix pulled2 = pullback_metric(q2, n);
      const bool same_partition = q2.partition == q.partition;
      const double drift = same_partition ? sup_distance(pulled, pulled2)
                                          : std::numeric_limits<double>::infinity();

      const FiniteMdp abstract = build_abstract_mdp(inst.mdp, q.partition);
      const Matrix abstract_d = solve_metric(abstract, b.metric_options()).final;
      EpsilonQuotient qa;
      qa.partition = q.partition;
      qa.d_q = abstract_d;
      const double abstract_shift = sup_distance(pullback_metric(qa, n), pulled);
      b.time("pullback[" + label(inst, eps) + "]", watch.lap_ms());

      b.row({{"kind", "backward_stability"},
             {"instance", inst.tag},
             {"epsilon", eps},
             {"classes", q.class_count()},
             {"same_partition", same_partition},
             {"drift", same_partition ? Json(drift) : Json(nullptr)},
             {"abstract_metric_shift", abstract_shift}});
      b.check("pullback_drift[" + label(inst, eps) + "]",
              same_partition && drift <= config.drift_tolerance, drift, config.drift_tolerance,
              same_partition ? "partition reproduced" : "partition changed");
      b.check_pseudometric("pullback," + label(inst, eps), pulled);
    }
  }
}

void info_theory(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    const double n = static_cast<double>(inst.mdp.n_states());
    for (double eps : epsilon_list(config, inst.run.final)) {
      const Partition p = epsilon_classes(inst.run.final, eps);
      const PartitionInfo info = partition_info(inst.run.final, p);
      Json r = io::partition_info_to_json(info);
      r["kind"] = "info_theory";
      r["instance"] = inst.tag;
      r["epsilon"] = eps;
      r["entropy_base"] = "e";
      b.row(std::move(r));
      b.check("compression_ratio[" + label(inst, eps) + "]",
              info.compression_ratio > 0.0 && info.compression_ratio <= 1.0,
              info.compression_ratio, 1.0);
      b.check("class_size_entropy[" + label(inst, eps) + "]",
              info.class_size_entropy >= 0.0 && info.class_size_entropy <= std::log(n) + 1e-12,
              info.class_size_entropy, std::log(n), "within [0, ln n]");
    }
  }
}

Matrix centered_gram(const Matrix& d) {
  const std::size_t n = d.rows();
  Matrix sq(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sq(i, j) = d(i, j) * d(i, j);
  std::vector<double> row_mean(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_mean[i] += sq(i, j);
    total += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  total /= static_cast<double>(n * n);
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      b(i, j) = -0.5 * (sq(i, j) - row_mean[i] - row_mean[j] + total);
  return b;
}

double frobenius(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

void spectral(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    const Matrix& d = inst.run.final;
    for (SpectralMode mode : {SpectralMode::Raw, SpectralMode::DoubleCentered}) {
      const std::string lbl = inst.tag + "," + to_string(mode);
      Stopwatch watch;
      const Matrix a = mode == SpectralMode::Raw ? d : centered_gram(d);
      const SpectralReport rep = spectral_report(d, mode);
      const EigenDecomposition eig = symmetric_eigs(a);
      b.time("spectral[" + lbl + "]", watch.lap_ms());

      const std::size_t n = a.rows();
      Matrix recon(n, n);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            recon(i, j) += eig.values[k] * eig.vectors(i, k) * eig.vectors(j, k);
      Matrix diff = recon;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) diff(i, j) -= a(i, j);
      const double norm = frobenius(a);
      const double recon_err = norm > 0.0 ? frobenius(diff) / norm : frobenius(diff);
      double trace = 0.0, eig_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
      for (double v : eig.values) eig_sum += v;
      const double trace_err = std::abs(eig_sum - trace) / std::max(1.0, norm);

      Json r = io::spectral_to_json(rep);
      r["kind"] = "spectral";
      r["instance"] = inst.tag;
      r["reconstruction_error"] = recon_err;
      r["trace_error"] = trace_err;
      r["jacobi_sweeps"] = eig.sweeps;
      r["radius_over_frobenius"] = rep.frobenius > 0.0 ? rep.spectral_radius / rep.frobenius : 0.0;
      b.row(std::move(r));

      b.check("reconstruction[" + lbl + "]", recon_err <= kSpectralTolerance, recon_err,
              kSpectralTolerance);
      b.check("trace[" + lbl + "]", trace_err <= kSpectralTolerance, trace_err,
              kSpectralTolerance, "sum of eigenvalues against trace");
      b.check("radius_le_frobenius[" + lbl + "]",
              rep.spectral_radius <= rep.frobenius * (1.0 + 1e-12), rep.spectral_radius,
              rep.frobenius);
      b.check("entropy_nonnegative[" + lbl + "]", rep.eigen_entropy >= 0.0, rep.eigen_entropy,
              0.0);
    }
  }
}

void scaling(const ExperimentConfig& config, Builder& b) {
  if (config.environment != Environment::Grid)
    throw ConfigError("config key 'environment' must be \"grid\" for scaling");
  for (std::size_t side : config.scaling_sides) {
    ExperimentConfig c = config;
    c.grid_side = side;
    c.goal = -1;
    const std::string tag = "side" + std::to_string(side);
    Stopwatch watch;
    const FiniteMdp m = make_environment(c, 0);
    const MetricRun run = solve_metric(m, b.metric_options());
    b.time("metric[" + tag + "]", watch.lap_ms());
    std::size_t smallest = m.n_states();
    for (double eps : epsilon_list(config, run.final)) {
      const EpsilonQuotient q = make_quotient(run.final, eps);
      (void)partition_info(run.final, q.partition);
      smallest = std::min(smallest, q.class_count());
    }
    b.time("quotient_sweep[" + tag + "]", watch.lap_ms());
    Json r = metric_row(run.final, run);
    b.time("diagnostics[" + tag + "]", watch.lap_ms());
    r["kind"] = "scaling";
    r["side"] = side;
    r["n_states"] = m.n_states();
    r["min_classes"] = smallest;
    b.row(std::move(r));
    b.file("d_m_" + tag + ".csv", io::metric_to_csv(run.final));
    b.check_pseudometric(tag, run.final);
  }
}

bool refines(const Partition& fine, const Partition& coarse) {
  std::vector<std::size_t> image(fine.class_count, coarse.class_count);
  for (std::size_t s = 0; s < fine.size(); ++s) {
    std::size_t& target = image[fine.class_of[s]];
    if (target == coarse.class_count) target = coarse.class_of[s];
    else if (target != coarse.class_of[s]) return false;
  }
  return true;
}

void compression_sweep(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    std::optional<Partition> previous;
    std::string values;
    for (double eps : epsilon_list(config, inst.run.final)) {
      Stopwatch watch;
      const EpsilonQuotient q = make_quotient(inst.run.final, eps);
      const ValueLossReport loss = value_loss_report(inst.mdp, inst.run.final, eps, b.planning());
      b.time("value_loss[" + label(inst, eps) + "]", watch.lap_ms());

      Json r = io::value_loss_to_json(loss);
      r["kind"] = "compression";
      r["instance"] = inst.tag;
      r["compression_ratio"] = q.compression_ratio();
      b.row(std::move(r));

      b.check("value_loss_diam_bound[" + label(inst, eps) + "]", loss.within_diam_bound,
              loss.loss, loss.bound_diam + kValueLossSlack);
      if (previous) {
        b.check("monotone_classes[" + label(inst, eps) + "]",
                q.class_count() <= previous->class_count,
                static_cast<double>(q.class_count()),
                static_cast<double>(previous->class_count));
        b.check("refinement[" + label(inst, eps) + "]", refines(*previous, q.partition), 0.0,
                0.0, "previous partition refines this one");
      }
      previous = q.partition;
      if (values.empty()) values = io::values_to_csv(loss.v_star);
    }
    b.file(inst.tag == "base" ? "v_star.csv" : "v_star_" + inst.tag + ".csv", values);
  }
}

void perturb_sweep(const ExperimentConfig& config, Builder& b) {
  for (Instance& inst : base_instances(config, b)) {
    const double gamma = inst.mdp.gamma();
    for (double delta : config.perturb_scales) {
      std::mt19937_64 engine(inst.seed);
      FiniteMdp m2 = inst.mdp;
      for (double& r : m2.rewards()) r += delta * (2.0 * unit_uniform(engine) - 1.0);
      Stopwatch watch;
      const MetricRun run2 = solve_metric(m2, b.metric_options());
      b.time("metric[" + inst.tag + ",delta=" + fmt(delta) + "]", watch.lap_ms());
      const double shift = sup_distance(inst.run.final, run2.final);
      const double bound = 2.0 * delta / (1.0 - gamma) + kPerturbSlack;

      Json r = metric_row(run2.final, run2);
      r["kind"] = "perturb";
      r["instance"] = inst.tag;
      r["delta"] = delta;
      r["sup_shift"] = shift;
      r["shift_bound"] = bound;
      b.row(std::move(r));
      b.check("perturbation_stability[" + inst.tag + ",delta=" + fmt(delta) + "]", shift <= bound,
              shift, bound, "sup |d_M' - d_M| <= 2 delta / (1 - gamma)");
      b.check_pseudometric(inst.tag + ",delta=" + fmt(delta), run2.final);
    }
  }
}

void adversarial(const ExperimentConfig& config, Builder& b) {
  std::vector<std::uint64_t> seeds = config.seeds;
  if (seeds.empty()) seeds = {0};
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  for (std::uint64_t seed : seeds) {
    const std::string tag = "seed" + std::to_string(seed);
    Stopwatch watch;
    const AdversarialResult res = adversarial_search(config.adversarial, seed, b.planning());
    b.time("search[" + tag + "]", watch.lap_ms());
    const InstanceInvariants& inv = res.invariants;

    Json r;
    r["kind"] = "adversarial";
    r["seed"] = seed;
    r["settings"] = res.settings;
    r["best_objective"] = res.best_objective;
    r["generations"] = res.generations;
    r["evaluations"] = res.evaluations;
    r["worst_rewards"] = io::matrix_to_json(res.worst_rewards);
    r["contraction_excess"] = inv.contraction_excess;
    r["lipschitz_excess"] = inv.lipschitz_excess;
    r["value_loss"] = inv.value_loss.loss;
    r["bound_eps"] = inv.value_loss.bound_eps;
    r["bound_diam"] = inv.value_loss.bound_diam;
    r["diam_bound_slack"] = inv.value_loss.bound_diam - inv.value_loss.loss;
    r["within_bound_eps"] = inv.value_loss.within_eps_bound;
    b.row(std::move(r));

    std::string trace = "generation,best_objective\n";
    for (std::size_t g = 0; g < res.objective_trace.size(); ++g)
      trace += std::to_string(g) + "," + fmt(res.objective_trace[g]) + "\n";
    b.file("objective_trace_" + tag + ".csv", trace);

    b.check("contraction[" + tag + "]", inv.contraction_ok, inv.contraction_excess,
            kContractionSlack, "worst instance");
    b.check("value_lipschitz[" + tag + "]", inv.lipschitz_ok, inv.lipschitz_excess,
            kLipschitzSlack, "worst instance");
    b.check("value_loss_diam_bound[" + tag + "]", inv.value_loss.within_diam_bound,
            inv.value_loss.loss, inv.value_loss.bound_diam + kValueLossSlack, "worst instance");
  }
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

Json SuiteReport::to_json() const {
  Json j;
  j["suite"] = to_string(suite);
  j["config"] = config;
  j["rows"] = rows;
  Json checks_json = Json::array();
  for (const auto& c : checks)
    checks_json.push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"value", std::isfinite(c.value) ? Json(c.value) : Json(nullptr)},
                           {"threshold", c.threshold},
                           {"detail", c.detail}});
  j["checks"] = std::move(checks_json);
  j["passed"] = passed();
  return j;
}

FiniteMdp make_environment(const ExperimentConfig& config, std::uint64_t seed) {
  switch (config.environment) {
    case Environment::Grid: {
      GridWorldSpec spec;
      spec.side = config.grid_side;
      spec.slip = config.slip;
      spec.gamma = config.gamma;
      spec.goal = config.goal < 0 ? config.grid_side * config.grid_side - 1
                                  : static_cast<std::size_t>(config.goal);
      spec.goal_reward = config.goal_reward;
      return make_grid_world(spec, seed);
    }
    case Environment::Random:
      return make_random_mdp(config.random_states, config.random_actions, config.gamma, seed);
    case Environment::Chain:
      return make_chain_example();
    case Environment::File:
      return io::load_mdp(config.mdp_file);
  }
  throw ConfigError("config key 'environment' is not recognised");
}

SuiteReport run_suite(const ExperimentConfig& config) {
  Builder b(config);
  Stopwatch total;
  switch (config.suite) {
    case Suite::MetricBaseline: metric_baseline(config, b); break;
    case Suite::TransferTest: transfer_test(config, b); break;
    case Suite::Composition: composition(config, b); break;
    case Suite::BackwardStability: backward_stability(config, b); break;
    case Suite::InfoTheory: info_theory(config, b); break;
    case Suite::Spectral: spectral(config, b); break;
    case Suite::Scaling: scaling(config, b); break;
    case Suite::CompressionSweep: compression_sweep(config, b); break;
    case Suite::PerturbSweep: perturb_sweep(config, b); break;
    case Suite::Adversarial: adversarial(config, b); break;
  }
  b.time("total", total.lap_ms());
  return b.take();
}

void write_report(const SuiteReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                                   ec.message());
  io::write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  Json meta;
  meta["suite"] = to_string(report.suite);
  meta["timings_ms"] = report.timings;
  io::write_text(dir / "metadata.json", meta.dump(2) + "\n");
  for (const auto& [name, contents] : report.files) io::write_text(dir / name, contents);
}

SuiteReport run_suite_to_disk(const ExperimentConfig& config) {
  SuiteReport report = run_suite(config);
  write_report(report, config.output_dir / to_string(config.suite));
  return report;
}

}  // namespace bisim
