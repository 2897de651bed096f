#include "bisim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <sstream>

#include "bisim/errors.hpp"

namespace bisim {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void check_weights(std::span<const double> w, const char* name) {
  double sum = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw PreconditionError(std::string(name) + " has a negative or non-finite weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    std::ostringstream os;
    os << name << " sums to " << sum << ", not 1";
    throw PreconditionError(os.str());
  }
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw PreconditionError("distribution needs a non-empty support");
  check_weights(weights_, "distribution");
}

DiscreteDistribution DiscreteDistribution::dirac(std::size_t n, std::size_t at) {
  if (at >= n) throw StructuralError("dirac point outside support");
  std::vector<double> w(n, 0.0);
  w[at] = 1.0;
  return DiscreteDistribution(std::move(w));
}

void TransportSolver::compact(std::span<const double> mu, std::span<const double> nu,
                              const Matrix& cost) {
  src_.clear();
  dst_.clear();
  supply_.clear();
  demand_.clear();
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0.0) {
      src_.push_back(i);
      supply_.push_back(mu[i]);
    }
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (nu[j] > 0.0) {
      dst_.push_back(j);
      demand_.push_back(nu[j]);
    }
  const std::size_t ns = src_.size(), nt = dst_.size();
  cost_.resize(ns * nt);
  for (std::size_t a = 0; a < ns; ++a) {
    auto row = cost.row(src_[a]);
    for (std::size_t b = 0; b < nt; ++b) cost_[a * nt + b] = row[dst_[b]];
  }
}

void TransportSolver::rebuild_tree() {
  const std::size_t n_nodes = src_.size() + dst_.size() + 1;
  const std::size_t root = n_nodes - 1;

  adj_start_.assign(n_nodes + 1, 0);
  for (std::size_t e : tree_arcs_) {
    ++adj_start_[tail_[e] + 1];
    ++adj_start_[head_[e] + 1];
  }
  for (std::size_t v = 0; v < n_nodes; ++v) adj_start_[v + 1] += adj_start_[v];
  adj_.resize(2 * tree_arcs_.size());
  {
    std::vector<std::size_t>& fill = queue_;
    fill.assign(adj_start_.begin(), adj_start_.end() - 1);
    for (std::size_t e : tree_arcs_) {
      adj_[fill[tail_[e]]++] = e;
      adj_[fill[head_[e]]++] = e;
    }
  }

  parent_.assign(n_nodes, kNone);
  parent_arc_.assign(n_nodes, kNone);
  depth_.assign(n_nodes, 0);
  potential_.assign(n_nodes, 0.0);
  queue_.clear();
  queue_.push_back(root);
  parent_[root] = root;
  for (std::size_t q = 0; q < queue_.size(); ++q) {
    const std::size_t u = queue_[q];
    for (std::size_t k = adj_start_[u]; k < adj_start_[u + 1]; ++k) {
      const std::size_t e = adj_[k];
      const std::size_t v = tail_[e] == u ? head_[e] : tail_[e];
      if (parent_[v] != kNone) continue;
      parent_[v] = u;
      parent_arc_[v] = e;
      depth_[v] = depth_[u] + 1;
      // Tree arcs have zero reduced cost: cost + pot[tail] - pot[head] = 0.
      potential_[v] = tail_[e] == u ? potential_[u] + arc_cost_[e]
                                    : potential_[u] - arc_cost_[e];
      queue_.push_back(v);
    }
  }
}

void TransportSolver::run() {
  const std::size_t ns = src_.size(), nt = dst_.size();
  const std::size_t n_nodes = ns + nt + 1;
  const std::size_t root = n_nodes - 1;
  const std::size_t n_real = ns * nt;
  const std::size_t n_arcs = n_real + ns + nt;

  double max_cost = 0.0;
  for (double c : cost_) max_cost = std::max(max_cost, c);
  const double big = (max_cost + 1.0) * static_cast<double>(n_nodes);
  const double tol = 1e-14 * big;

  tail_.resize(n_arcs);
  head_.resize(n_arcs);
  arc_cost_.resize(n_arcs);
  flow_.assign(n_arcs, 0.0);
  in_tree_.assign(n_arcs, 0);
  tree_arcs_.clear();
  for (std::size_t a = 0; a < ns; ++a)
    for (std::size_t b = 0; b < nt; ++b) {
      const std::size_t e = a * nt + b;
      tail_[e] = a;
      head_[e] = ns + b;
      arc_cost_[e] = cost_[e];
    }
  // Artificial arcs all carry positive flow initially, so the starting tree
  // is strongly feasible.
  for (std::size_t a = 0; a < ns; ++a) {
    const std::size_t e = n_real + a;
    tail_[e] = a;
    head_[e] = root;
    arc_cost_[e] = big;
    flow_[e] = supply_[a];
    in_tree_[e] = 1;
    tree_arcs_.push_back(e);
  }
  for (std::size_t b = 0; b < nt; ++b) {
    const std::size_t e = n_real + ns + b;
    tail_[e] = root;
    head_[e] = ns + b;
    arc_cost_[e] = big;
    flow_[e] = demand_[b];
    in_tree_[e] = 1;
    tree_arcs_.push_back(e);
  }
  rebuild_tree();

  pivots_ = 0;
  const std::size_t pivot_cap = 50 * n_arcs * n_nodes + 1000;
  for (;;) {
    // Most negative reduced cost; ties go to the lowest arc index.
    std::size_t entering = kNone;
    double most_negative = -tol;
    for (std::size_t e = 0; e < n_real; ++e) {
      const double rc = arc_cost_[e] + potential_[tail_[e]] - potential_[head_[e]];
      if (rc < most_negative && !in_tree_[e]) {
        most_negative = rc;
        entering = e;
      }
    }
    if (entering == kNone) break;
    if (++pivots_ > pivot_cap)
      throw ConvergenceError("transport simplex exceeded its pivot cap");

    // Paths from both endpoints up to the apex of the pivot cycle.
    up_k_.clear();
    up_l_.clear();
    std::size_t a = tail_[entering], b = head_[entering];
    while (depth_[a] > depth_[b]) {
      up_k_.push_back(a);
      a = parent_[a];
    }
    while (depth_[b] > depth_[a]) {
      up_l_.push_back(b);
      b = parent_[b];
    }
    while (a != b) {
      up_k_.push_back(a);
      a = parent_[a];
      up_l_.push_back(b);
      b = parent_[b];
    }

    // Walk the cycle from the apex along the entering arc's orientation and
    // keep the last blocking arc (strongly feasible leaving rule).
    double delta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    for (auto it = up_k_.rbegin(); it != up_k_.rend(); ++it) {
      const std::size_t e = parent_arc_[*it];
      const bool forward = tail_[e] == parent_[*it];
      if (!forward && flow_[e] <= delta) {
        delta = flow_[e];
        leaving = e;
      }
    }
    for (std::size_t x : up_l_) {
      const std::size_t e = parent_arc_[x];
      const bool forward = tail_[e] == x;
      if (!forward && flow_[e] <= delta) {
        delta = flow_[e];
        leaving = e;
      }
    }
    if (leaving == kNone)
      throw ConvergenceError("transport simplex found an unbounded direction");

    if (delta > 0.0) {
      for (std::size_t x : up_k_) {
        const std::size_t e = parent_arc_[x];
        flow_[e] += tail_[e] == parent_[x] ? delta : -delta;
      }
      for (std::size_t x : up_l_) {
        const std::size_t e = parent_arc_[x];
        flow_[e] += tail_[e] == x ? delta : -delta;
      }
    }
    flow_[entering] = delta;
    flow_[leaving] = 0.0;
    in_tree_[leaving] = 0;
    in_tree_[entering] = 1;
    *std::find(tree_arcs_.begin(), tree_arcs_.end(), leaving) = entering;
    rebuild_tree();
  }
  for (double& f : flow_) f = std::max(f, 0.0);
}

double TransportSolver::compact_value() const {
  double v = 0.0;
  const std::size_t n_real = src_.size() * dst_.size();
  for (std::size_t e = 0; e < n_real; ++e) v += arc_cost_[e] * flow_[e];
  return v;
}

double TransportSolver::distance(std::span<const double> mu, std::span<const double> nu,
                                 const Matrix& cost) {
  compact(mu, nu, cost);
  const std::size_t ns = src_.size(), nt = dst_.size();
  // A single source or sink admits exactly one coupling.
  if (ns == 1) {
    double v = 0.0;
    for (std::size_t b = 0; b < nt; ++b) v += cost_[b] * demand_[b];
    return v;
  }
  if (nt == 1) {
    double v = 0.0;
    for (std::size_t a = 0; a < ns; ++a) v += cost_[a] * supply_[a];
    return v;
  }
  run();
  return compact_value();
}

TransportSolution TransportSolver::solve(std::span<const double> mu,
                                         std::span<const double> nu, const Matrix& cost) {
  const std::size_t n = mu.size(), m = nu.size();
  if (cost.rows() != n || cost.cols() != m)
    throw StructuralError("cost matrix shape does not match the marginals");
  for (double c : cost.data())
    if (!std::isfinite(c) || c < 0.0)
      throw PreconditionError("cost entries must be finite and nonnegative");
  check_weights(mu, "mu");
  check_weights(nu, "nu");

  compact(mu, nu, cost);
  run();
  const std::size_t ns = src_.size(), nt = dst_.size();

  TransportSolution sol;
  sol.pivots = pivots_;
  sol.value = compact_value();
  sol.coupling = Matrix(n, m);
  for (std::size_t a = 0; a < ns; ++a)
    for (std::size_t b = 0; b < nt; ++b) sol.coupling(src_[a], dst_[b]) = flow_[a * nt + b];

  // Potentials on the support, normalised so that the first source gets 0.
  const double shift = potential_[0];
  sol.dual_f.assign(n, 0.0);
  sol.dual_g.assign(m, 0.0);
  std::vector<char> has_f(n, 0), has_g(m, 0);
  for (std::size_t a = 0; a < ns; ++a) {
    sol.dual_f[src_[a]] = shift - potential_[a];
    has_f[src_[a]] = 1;
  }
  for (std::size_t b = 0; b < nt; ++b) {
    sol.dual_g[dst_[b]] = potential_[ns + b] - shift;
    has_g[dst_[b]] = 1;
  }
  // Zero-mass points: the largest potential that keeps f_i + g_j <= c_ij.
  for (std::size_t j = 0; j < m; ++j) {
    if (has_g[j]) continue;
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i : src_) g = std::min(g, cost(i, j) - sol.dual_f[i]);
    sol.dual_g[j] = g;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (has_f[i]) continue;
    double f = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) f = std::min(f, cost(i, j) - sol.dual_g[j]);
    sol.dual_f[i] = f;
  }

  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) dual += sol.dual_f[i] * mu[i];
  for (std::size_t j = 0; j < m; ++j) dual += sol.dual_g[j] * nu[j];
  sol.gap = sol.value - dual;
  return sol;
}

TransportSolution w1_exact(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                           const Matrix& cost) {
  if (mu.size() != nu.size())
    throw PreconditionError("mu and nu must share the same support size");
  TransportSolver solver;
  return solver.solve(mu.weights(), nu.weights(), cost);
}

double w1_line_oracle(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  if (mu.size() != nu.size())
    throw PreconditionError("mu and nu must share the same support size");
  double cdf_mu = 0.0, cdf_nu = 0.0, total = 0.0;
  for (std::size_t k = 0; k + 1 < mu.size(); ++k) {
    cdf_mu += mu[k];
    cdf_nu += nu[k];
    total += std::abs(cdf_mu - cdf_nu);
  }
  return total;
}

double kr_gap(const TransportSolution& sol, const DiscreteDistribution& mu,
              const DiscreteDistribution& nu) {
  if (sol.dual_f.size() != mu.size() || sol.dual_g.size() != nu.size())
    throw StructuralError("solution does not match the marginals");
  double dual = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) dual += sol.dual_f[i] * mu[i];
  for (std::size_t j = 0; j < nu.size(); ++j) dual += sol.dual_g[j] * nu[j];
  return std::abs(sol.value - dual);
}

std::string to_json(const TransportSolution& sol) {
  nlohmann::json j;
  j["value"] = sol.value;
  j["gap"] = sol.gap;
  j["pivots"] = sol.pivots;
  j["dual_f"] = sol.dual_f;
  j["dual_g"] = sol.dual_g;
  auto& rows = j["coupling"] = nlohmann::json::array();
  for (std::size_t i = 0; i < sol.coupling.rows(); ++i) {
    auto r = sol.coupling.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return j.dump(2);
}

}  // namespace bisim
