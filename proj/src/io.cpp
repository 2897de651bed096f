#include "bisim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bisim/errors.hpp"

namespace bisim::io {

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

Json mdp_to_json(const FiniteMdp& m, const Json& metadata) {
  Json j;
  j["n_states"] = m.n_states();
  j["n_actions"] = m.n_actions();
  j["gamma"] = m.gamma();
  Json rewards = Json::array();
  Json transitions = Json::array();
  for (StateId s = 0; s < m.n_states(); ++s) {
    Json r = Json::array();
    Json t = Json::array();
    for (ActionId a = 0; a < m.n_actions(); ++a) {
      r.push_back(m.reward(s, a));
      auto row = m.next(s, a);
      t.push_back(std::vector<double>(row.begin(), row.end()));
    }
    rewards.push_back(std::move(r));
    transitions.push_back(std::move(t));
  }
  j["rewards"] = std::move(rewards);
  j["transitions"] = std::move(transitions);
  if (!metadata.is_null()) j["metadata"] = metadata;
  return j;
}

FiniteMdp mdp_from_json(const Json& j) {
  try {
    const auto n = j.at("n_states").get<std::size_t>();
    const auto m = j.at("n_actions").get<std::size_t>();
    const auto gamma = j.at("gamma").get<double>();
    const auto& rewards = j.at("rewards");
    const auto& transitions = j.at("transitions");
    if (rewards.size() != n || transitions.size() != n)
      throw StructuralError("rewards/transitions need n_states rows");
    std::vector<double> r, p;
    r.reserve(n * m);
    p.reserve(n * m * n);
    for (std::size_t s = 0; s < n; ++s) {
      if (rewards[s].size() != m || transitions[s].size() != m)
        throw StructuralError("rewards/transitions need n_actions entries per state");
      for (std::size_t a = 0; a < m; ++a) {
        r.push_back(rewards[s][a].get<double>());
        const auto& row = transitions[s][a];
        if (row.size() != n) throw StructuralError("transition rows need n_states entries");
        for (const auto& x : row) p.push_back(x.get<double>());
      }
    }
    FiniteMdp mdp(n, m, gamma, std::move(p), std::move(r));
    require_valid(mdp);
    return mdp;
  } catch (const Json::exception& e) {
    throw StructuralError(std::string("malformed MDP document: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

FiniteMdp load_mdp(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw StructuralError(path.string() + ": " + e.what());
  }
  return mdp_from_json(j);
}

void save_mdp(const std::filesystem::path& path, const FiniteMdp& m, const Json& metadata) {
  write_text(path, mdp_to_json(m, metadata).dump(2) + "\n");
}

std::string metric_to_csv(const Matrix& d) {
  std::string out = std::to_string(d.rows()) + "\n";
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      if (j) out += ',';
      out += format_double(d(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix metric_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw StructuralError("empty metric CSV");
  const std::size_t n = std::stoul(line);
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw StructuralError("metric CSV has too few rows");
    std::istringstream row(line);
    std::string cell;
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::getline(row, cell, ',')) throw StructuralError("metric CSV row too short");
      d(i, j) = std::stod(cell);
    }
  }
  return d;
}

Json matrix_to_json(const Matrix& d) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto r = d.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Matrix d(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw StructuralError("ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) d(i, k) = j[i][k].get<double>();
  }
  return d;
}

std::string residuals_to_csv(const std::vector<double>& residuals) {
  std::string out = "iteration,residual\n";
  for (std::size_t k = 0; k < residuals.size(); ++k)
    out += std::to_string(k + 1) + "," + format_double(residuals[k]) + "\n";
  return out;
}

std::string values_to_csv(const ValueFunction& v, const Policy& policy) {
  std::string out = policy.empty() ? "state,value\n" : "state,value,action\n";
  for (std::size_t s = 0; s < v.size(); ++s) {
    out += std::to_string(s) + "," + format_double(v[s]);
    if (!policy.empty()) out += "," + std::to_string(policy[s]);
    out += '\n';
  }
  return out;
}

namespace {

// NaN is not representable in JSON.
Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json quotient_to_json(const EpsilonQuotient& q) {
  Json j;
  j["epsilon"] = q.epsilon;
  j["classes"] = q.class_members;
  j["class_of"] = q.partition.class_of;
  j["d_q"] = matrix_to_json(q.d_q);
  j["d_min"] = matrix_to_json(q.d_min);
  j["intra_diameters"] = q.intra_diameters;
  j["compression_ratio"] = q.compression_ratio();
  return j;
}

Json spectral_to_json(const SpectralReport& r) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["frobenius"] = r.frobenius;
  j["spectral_radius"] = r.spectral_radius;
  j["condition_number"] = number_or_null(r.condition_number);
  j["condition_defined"] = r.condition_defined;
  j["eigen_entropy"] = r.eigen_entropy;
  j["eigen_entropy_defined"] = r.entropy_defined;
  j["eigen_entropy_base"] = "e";
  j["eigenvalues"] = r.eigenvalues;
  return j;
}

Json partition_info_to_json(const PartitionInfo& info) {
  Json j;
  j["class_count"] = info.class_count;
  j["compression_ratio"] = info.compression_ratio;
  j["intra_class_diameters"] = info.intra_class_diameters;
  j["intra_class_variance"] = info.intra_class_variance;
  j["class_size_entropy"] = info.class_size_entropy;
  return j;
}

Json value_loss_to_json(const ValueLossReport& r) {
  Json j;
  j["epsilon"] = r.epsilon;
  j["gamma"] = r.gamma;
  j["classes"] = r.classes;
  j["max_intra_diameter"] = r.max_intra_diameter;
  j["value_loss"] = r.loss;
  j["bound_eps"] = r.bound_eps;
  j["bound_diam"] = r.bound_diam;
  j["within_bound_eps"] = r.within_eps_bound;
  j["within_bound_diam"] = r.within_diam_bound;
  j["lifted_policy"] = r.lifted_policy;
  return j;
}

Json idempotence_to_json(const IdempotenceReport& r) {
  Json j;
  j["epsilon"] = r.epsilon;
  j["classes"] = r.classes;
  j["requotient_classes"] = r.requotient_classes;
  j["bijection"] = r.bijection;
  j["drift"] = number_or_null(r.drift);
  j["abstract_classes"] = r.abstract_classes;
  j["abstract_bijection"] = r.abstract_bijection;
  j["abstract_metric_shift"] = r.abstract_metric_shift;
  j["ok"] = r.ok;
  return j;
}

}  // namespace bisim::io
