#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <string>
#include <vector>

#include "bisim/config.hpp"
#include "bisim/diagnostics.hpp"
#include "bisim/errors.hpp"
#include "bisim/io.hpp"
#include "bisim/logic.hpp"
#include "bisim/metric.hpp"
#include "bisim/planning.hpp"
#include "bisim/quotient.hpp"
#include "bisim/suites.hpp"
#include "bisim/transport.hpp"

namespace py = pybind11;
using namespace bisim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw StructuralError("expected a 2-d array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw StructuralError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

FiniteMdp make_mdp(const Array& transitions, const Array& rewards, double gamma) {
  if (transitions.ndim() != 3 || rewards.ndim() != 2)
    throw StructuralError("transitions must be (n, m, n) and rewards (n, m)");
  const std::size_t n = transitions.shape(0), m = transitions.shape(1);
  if (transitions.shape(2) != static_cast<py::ssize_t>(n) ||
      rewards.shape(0) != static_cast<py::ssize_t>(n) ||
      rewards.shape(1) != static_cast<py::ssize_t>(m))
    throw StructuralError("transitions must be (n, m, n) and rewards (n, m)");
  FiniteMdp mdp(n, m, gamma, {transitions.data(), transitions.data() + transitions.size()},
                {rewards.data(), rewards.data() + rewards.size()});
  require_valid(mdp);
  return mdp;
}

}  // namespace

PYBIND11_MODULE(_bisim, mod) {
  mod.doc() = "Bisimulation metrics, quotients and planning bounds for finite MDPs";

  py::register_exception<StructuralError>(mod, "StructuralError", PyExc_ValueError);
  py::register_exception<PreconditionError>(mod, "PreconditionError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(mod, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);

  py::class_<FiniteMdp>(mod, "Mdp")
      .def(py::init(&make_mdp), py::arg("transitions"), py::arg("rewards"), py::arg("gamma"),
           "transitions[s, a, t] and rewards[s, a]; validated on construction")
      .def_property_readonly("n_states", &FiniteMdp::n_states)
      .def_property_readonly("n_actions", &FiniteMdp::n_actions)
      .def_property_readonly("gamma", &FiniteMdp::gamma)
      .def_property_readonly("transitions",
                             [](const FiniteMdp& m) {
                               Array out({m.n_states(), m.n_actions(), m.n_states()});
                               std::copy(m.transitions().begin(), m.transitions().end(),
                                         out.mutable_data());
                               return out;
                             })
      .def_property_readonly("rewards",
                             [](const FiniteMdp& m) {
                               Array out({m.n_states(), m.n_actions()});
                               std::copy(m.rewards().begin(), m.rewards().end(),
                                         out.mutable_data());
                               return out;
                             })
      .def("to_json", [](const FiniteMdp& m) { return io::mdp_to_json(m).dump(); })
      .def_static("from_json",
                  [](const std::string& text) {
                    return io::mdp_from_json(nlohmann::json::parse(text));
                  })
      .def_static("load", [](const std::string& path) { return io::load_mdp(path); })
      .def_static("chain", &make_chain_example)
      .def_static(
          "grid_world",
          [](std::size_t side, double slip, double gamma, long goal) {
            GridWorldSpec spec{side, slip, gamma, goal < 0 ? side * side - 1 : std::size_t(goal),
                               1.0};
            return make_grid_world(spec);
          },
          py::arg("side") = 5, py::arg("slip") = 0.07, py::arg("gamma") = 0.95,
          py::arg("goal") = -1)
      .def_static("random", &make_random_mdp, py::arg("n_states"), py::arg("n_actions"),
                  py::arg("gamma"), py::arg("seed"))
      .def("reindex_actions",
           [](const FiniteMdp& m, const std::vector<ActionId>& f) { return reindex_actions(m, f); })
      .def("__repr__", [](const FiniteMdp& m) {
        return "<Mdp states=" + std::to_string(m.n_states()) +
               " actions=" + std::to_string(m.n_actions()) + " gamma=" + io::format_double(m.gamma()) +
               ">";
      });

  mod.def(
      "solve_metric",
      [](const FiniteMdp& m, double tol, unsigned threads) {
        MetricOptions o;
        o.tolerance = tol;
        o.threads = threads;
        MetricRun run;
        {
          py::gil_scoped_release release;
          run = solve_metric(m, o);
        }
        py::dict out;
        out["d"] = to_array(run.final);
        out["iterations"] = run.iterations;
        out["residuals"] = to_array(run.residuals);
        out["certified_error"] = run.certified_error;
        return out;
      },
      py::arg("mdp"), py::arg("tol") = 1e-9, py::arg("threads") = 1,
      "Behavioural metric by fixed-point iteration from zero");

  mod.def(
      "apply_operator",
      [](const FiniteMdp& m, const Array& d) { return to_array(apply_operator(m, to_matrix(d))); },
      py::arg("mdp"), py::arg("d"));

  mod.def(
      "w1",
      [](const Array& mu, const Array& nu, const Array& cost) {
        const DiscreteDistribution a(to_vector(mu)), b(to_vector(nu));
        const TransportSolution sol = w1_exact(a, b, to_matrix(cost));
        py::dict out;
        out["value"] = sol.value;
        out["coupling"] = to_array(sol.coupling);
        out["dual_f"] = to_array(sol.dual_f);
        out["dual_g"] = to_array(sol.dual_g);
        out["gap"] = kr_gap(sol, a, b);
        return out;
      },
      py::arg("mu"), py::arg("nu"), py::arg("cost"),
      "Exact Wasserstein-1 distance with optimal coupling and duals");

  mod.def(
      "check_pseudometric",
      [](const Array& d) {
        const PseudoMetricCheck c = check_pseudometric(to_matrix(d));
        py::dict out;
        out["ok"] = c.ok;
        out["max_diagonal"] = c.max_diagonal;
        out["max_asymmetry"] = c.max_asymmetry;
        out["min_entry"] = c.min_entry;
        out["max_triangle_excess"] = c.max_triangle_excess;
        return out;
      },
      py::arg("d"));

  mod.def(
      "quotient",
      [](const Array& d, double eps) {
        const EpsilonQuotient q = make_quotient(to_matrix(d), eps);
        py::dict out;
        out["epsilon"] = q.epsilon;
        out["class_of"] = q.partition.class_of;
        out["classes"] = q.class_members;
        out["d_q"] = to_array(q.d_q);
        out["intra_diameters"] = q.intra_diameters;
        return out;
      },
      py::arg("d"), py::arg("epsilon"), "Epsilon-quotient of a pseudometric");

  mod.def(
      "idempotence_check",
      [](const FiniteMdp& m, double eps, double tol) {
        return to_python(io::idempotence_to_json(idempotence_check(m, eps, tol)));
      },
      py::arg("mdp"), py::arg("epsilon"), py::arg("tol") = 1e-9);

  mod.def(
      "value_iteration",
      [](const FiniteMdp& m, double tol) { return to_array(value_iteration(m, tol)); },
      py::arg("mdp"), py::arg("tol") = 1e-9);

  mod.def(
      "greedy_policy",
      [](const FiniteMdp& m, const Array& v) { return greedy_policy(m, to_vector(v)); },
      py::arg("mdp"), py::arg("v"));

  mod.def(
      "policy_value",
      [](const FiniteMdp& m, const std::vector<ActionId>& policy, double tol) {
        return to_array(policy_value(m, policy, tol));
      },
      py::arg("mdp"), py::arg("policy"), py::arg("tol") = 1e-9);

  mod.def(
      "value_loss",
      [](const FiniteMdp& m, double eps) {
        return to_python(io::value_loss_to_json(value_loss_report(m, eps)));
      },
      py::arg("mdp"), py::arg("epsilon"),
      "Value loss of the lifted abstract policy with its two bounds");

  mod.def(
      "eval_formula",
      [](const FiniteMdp& m, const std::string& sexpr) {
        return to_array(logic::eval_formula(m, logic::parse_sexpr(sexpr)));
      },
      py::arg("mdp"), py::arg("formula"), "Evaluate an s-expression formula at every state");

  mod.def(
      "random_formula",
      [](const FiniteMdp& m, std::uint64_t seed) {
        std::mt19937_64 engine(seed);
        return logic::to_sexpr(logic::random_safe_formula(m, engine));
      },
      py::arg("mdp"), py::arg("seed"));

  mod.def(
      "soundness_probe",
      [](const FiniteMdp& m, const Array& d, std::uint64_t seed, std::size_t count) {
        const logic::SoundnessReport r = logic::soundness_probe(m, to_matrix(d), seed, count);
        py::dict out;
        out["formulas"] = r.formulas;
        out["pairs_checked"] = r.pairs_checked;
        out["violations"] = r.violations;
        out["max_excess"] = r.max_excess;
        out["worst_formula"] = r.worst_formula;
        out["ok"] = r.ok;
        return out;
      },
      py::arg("mdp"), py::arg("d"), py::arg("seed") = 0, py::arg("count") = 500);

  mod.def(
      "completeness_probe",
      [](const FiniteMdp& m, const Array& d, StateId s1, StateId s2, std::size_t depth) {
        const logic::CompletenessProbe p = logic::completeness_probe(m, to_matrix(d), s1, s2, depth);
        return py::make_tuple(p.lower_bound, p.gap);
      },
      py::arg("mdp"), py::arg("d"), py::arg("s1"), py::arg("s2"), py::arg("depth"),
      "(lower_bound, gap) from the depth-k mimicking formula");

  mod.def(
      "spectral_report",
      [](const Array& d, bool centered) {
        return to_python(io::spectral_to_json(
            spectral_report(to_matrix(d), centered ? SpectralMode::DoubleCentered : SpectralMode::Raw)));
      },
      py::arg("d"), py::arg("centered") = false);

  mod.def(
      "summary_stats",
      [](const Array& d) {
        const SummaryStats s = summary_stats(to_matrix(d));
        return py::make_tuple(s.mean, s.std);
      },
      py::arg("d"), "(mean, population std) over all entries");

  mod.def(
      "run_suite",
      [](const std::string& config, bool write) {
        const ExperimentConfig c = parse_config(config);
        SuiteReport r;
        {
          py::gil_scoped_release release;
          r = write ? run_suite_to_disk(c) : run_suite(c);
        }
        return to_python(r.to_json());
      },
      py::arg("config"), py::arg("write") = false,
      "Run one experiment suite from config text (key = value lines) and return its report");
}
