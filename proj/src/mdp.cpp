#include "bisim/mdp.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bisim/errors.hpp"
#include "bisim/random.hpp"

namespace bisim {

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions, double gamma)
    : FiniteMdp(n_states, n_actions, gamma,
                std::vector<double>(n_states * n_actions * n_states, 0.0),
                std::vector<double>(n_states * n_actions, 0.0)) {}

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions, double gamma,
                     std::vector<double> transitions, std::vector<double> rewards)
    : n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)) {
  if (n_states_ == 0 || n_actions_ == 0)
    throw StructuralError("MDP needs at least one state and one action");
  if (transitions_.size() != n_states_ * n_actions_ * n_states_) {
    std::ostringstream os;
    os << "transition tensor has " << transitions_.size() << " entries, expected "
       << n_states_ * n_actions_ * n_states_;
    throw StructuralError(os.str());
  }
  if (rewards_.size() != n_states_ * n_actions_) {
    std::ostringstream os;
    os << "reward matrix has " << rewards_.size() << " entries, expected "
       << n_states_ * n_actions_;
    throw StructuralError(os.str());
  }
}

double FiniteMdp::reward_bound() const {
  double r = 0.0;
  for (double x : rewards_) r = std::max(r, std::abs(x));
  return r;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::RowSum: return "row-sum";
    case ViolationKind::Negative: return "negative";
    case ViolationKind::NonFinite: return "non-finite";
    case ViolationKind::Discount: return "discount";
  }
  return "unknown";
}

namespace {

std::string where(StateId s, ActionId a) {
  std::ostringstream os;
  os << "(" << s << "," << a << ")";
  return os.str();
}

std::string where(StateId s, ActionId a, StateId t) {
  std::ostringstream os;
  os << "(" << s << "," << a << "," << t << ")";
  return os.str();
}

}  // namespace

ValidationReport validate_mdp(const FiniteMdp& m) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string loc, double mag) {
    report.violations.push_back({k, std::move(loc), mag});
  };
  if (!(m.gamma() > 0.0 && m.gamma() < 1.0))
    add(ViolationKind::Discount, "gamma", m.gamma());
  for (StateId s = 0; s < m.n_states(); ++s) {
    for (ActionId a = 0; a < m.n_actions(); ++a) {
      double r = m.reward(s, a);
      if (!std::isfinite(r)) add(ViolationKind::NonFinite, "reward" + where(s, a), r);
      double sum = 0.0;
      bool finite_row = true;
      auto row = m.next(s, a);
      for (StateId t = 0; t < row.size(); ++t) {
        double p = row[t];
        if (!std::isfinite(p)) {
          add(ViolationKind::NonFinite, "transition" + where(s, a, t), p);
          finite_row = false;
          continue;
        }
        if (p < 0.0) add(ViolationKind::Negative, where(s, a, t), -p);
        sum += p;
      }
      if (finite_row && std::abs(sum - 1.0) > kRowSumTolerance)
        add(ViolationKind::RowSum, where(s, a), std::abs(sum - 1.0));
    }
  }
  report.ok = report.violations.empty();
  return report;
}

void require_valid(const FiniteMdp& m) {
  auto report = validate_mdp(m);
  if (!report.ok) {
    const auto& v = report.violations.front();
    std::ostringstream os;
    os << "invalid MDP: " << to_string(v.kind) << " violation at " << v.location
       << " (magnitude " << v.magnitude << ")";
    if (report.violations.size() > 1) os << " and " << report.violations.size() - 1 << " more";
    throw PreconditionError(os.str());
  }
}

FiniteMdp make_chain_example() {
  FiniteMdp m(3, 1, 0.9);
  m.next(0, 0)[1] = 1.0;
  m.next(1, 0)[2] = 1.0;
  m.next(2, 0)[2] = 1.0;
  m.reward(1, 0) = 1.0;
  return m;
}

FiniteMdp make_grid_world(const GridWorldSpec& spec, std::uint64_t /*seed*/) {
  if (spec.side == 0) throw PreconditionError("grid side must be positive");
  if (!(spec.slip >= 0.0 && spec.slip <= 1.0))
    throw PreconditionError("grid slip must lie in [0,1]");
  if (spec.goal >= spec.side * spec.side)
    throw PreconditionError("grid goal cell outside the grid");
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0))
    throw PreconditionError("grid gamma must lie in (0,1)");

  const std::size_t side = spec.side;
  const std::size_t n = side * side;
  FiniteMdp m(n, 4, spec.gamma);

  for (StateId s = 0; s < n; ++s) {
    const std::size_t r = s / side;
    const std::size_t c = s % side;
    // Indexed by GridAction; n means "off grid".
    const StateId target[4] = {
        r > 0 ? s - side : n,
        r + 1 < side ? s + side : n,
        c > 0 ? s - 1 : n,
        c + 1 < side ? s + 1 : n,
    };
    std::vector<StateId> neighbours;
    for (StateId t : target)
      if (t != n) neighbours.push_back(t);

    for (ActionId a = 0; a < 4; ++a) {
      auto row = m.next(s, a);
      row[target[a] == n ? s : target[a]] += 1.0 - spec.slip;
      if (neighbours.empty()) {
        row[s] += spec.slip;  // 1x1 grid
      } else {
        const double share = spec.slip / static_cast<double>(neighbours.size());
        for (StateId t : neighbours) row[t] += share;
      }
      m.reward(s, a) = s == spec.goal ? spec.goal_reward : 0.0;
    }
  }
  return m;
}

FiniteMdp make_random_mdp(std::size_t n, std::size_t m, double gamma, std::uint64_t seed) {
  if (n == 0 || m == 0) throw PreconditionError("random MDP needs n, m >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("gamma must lie in (0,1)");
  FiniteMdp mdp(n, m, gamma);
  std::mt19937_64 engine(seed);
  for (StateId s = 0; s < n; ++s) {
    for (ActionId a = 0; a < m; ++a) {
      auto row = mdp.next(s, a);
      double total = 0.0;
      for (auto& p : row) {
        p = standard_exponential(engine);
        total += p;
      }
      for (auto& p : row) p /= total;
      mdp.reward(s, a) = 2.0 * unit_uniform(engine) - 1.0;
    }
  }
  return mdp;
}

FiniteMdp reindex_actions(const FiniteMdp& m, std::span<const ActionId> f) {
  if (f.empty()) throw StructuralError("action map must be non-empty");
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] >= m.n_actions()) {
      std::ostringstream os;
      os << "action map sends " << k << " to " << f[k] << ", outside 0.."
         << m.n_actions() - 1;
      throw StructuralError(os.str());
    }
  }
  FiniteMdp out(m.n_states(), f.size(), m.gamma());
  for (StateId s = 0; s < m.n_states(); ++s) {
    for (ActionId a = 0; a < f.size(); ++a) {
      auto src = m.next(s, f[a]);
      std::copy(src.begin(), src.end(), out.next(s, a).begin());
      out.reward(s, a) = m.reward(s, f[a]);
    }
  }
  return out;
}

}  // namespace bisim
