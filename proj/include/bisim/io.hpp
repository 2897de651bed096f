#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "bisim/diagnostics.hpp"
#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"
#include "bisim/metric.hpp"
#include "bisim/planning.hpp"
#include "bisim/quotient.hpp"

namespace bisim::io {

using Json = nlohmann::json;

// MDP documents: {n_states, n_actions, gamma, rewards[s][a],
// transitions[s][a][s'], metadata?}.
Json mdp_to_json(const FiniteMdp& m, const Json& metadata = nullptr);
/// Parses and re-validates; throws StructuralError / PreconditionError.
FiniteMdp mdp_from_json(const Json& j);
FiniteMdp load_mdp(const std::filesystem::path& path);
void save_mdp(const std::filesystem::path& path, const FiniteMdp& m,
              const Json& metadata = nullptr);

/// "n" on the first line, then n comma-separated rows.
std::string metric_to_csv(const Matrix& d);
Matrix metric_from_csv(const std::string& text);
Json matrix_to_json(const Matrix& d);
Matrix matrix_from_json(const Json& j);

/// "iteration,residual" rows.
std::string residuals_to_csv(const std::vector<double>& residuals);
/// "state,value" rows, or "state,value,action" when a policy is given.
std::string values_to_csv(const ValueFunction& v, const Policy& policy = {});

Json quotient_to_json(const EpsilonQuotient& q);
Json spectral_to_json(const SpectralReport& r);
Json partition_info_to_json(const PartitionInfo& info);
Json value_loss_to_json(const ValueLossReport& r);
Json idempotence_to_json(const IdempotenceReport& r);

/// Writes text, throwing std::runtime_error naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Formats a double with round-trip precision.
std::string format_double(double x);

}  // namespace bisim::io
