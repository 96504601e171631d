#pragma once

#include <string>

#include "json.hpp"
#include "socem/dynamics_fit.hpp"
#include "socem/policy.hpp"

namespace socem {

using nlohmann::json;

/// Matrices are nested row-major arrays; vectors are flat arrays.
json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const json& j, const std::string& name);
json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const json& j, const std::string& name);

/// {T, n_s, n_a, steps: [{F, e, Sigma_sqrt}]}.
json policy_to_json(const PolicyParams& p);
PolicyParams policy_from_json(const json& j);

json model_to_json(const LtvModel& m);
LtvModel model_from_json(const json& j);

json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

PolicyParams load_policy(const std::string& path);
void save_policy(const PolicyParams& p, const std::string& path);

/// Columnar CSV with header k,m,s1..,a1..,s_next1..,y; k and m are 1-based.
void write_episode_csv(const EpisodeData& data, const std::string& path);
EpisodeData read_episode_csv(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace socem
