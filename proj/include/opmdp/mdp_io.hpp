#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "opmdp/mdp.hpp"

namespace opmdp {

// MDP documents are JSON objects with the fields
//   n_states, n_actions, gamma,
//   rho        (n_states numbers),
//   cost       (row-major [s][a]),
//   transition (row-major [s][a][s']).
// Policies use n_states, n_actions and probs (row-major [s][a]).

nlohmann::json mdp_to_json(const FiniteMdp& mdp);
FiniteMdp mdp_from_json(const nlohmann::json& doc);

nlohmann::json policy_to_json(const PolicyMatrix& pi);
PolicyMatrix policy_from_json(const nlohmann::json& doc);

void save_mdp(const FiniteMdp& mdp, const std::filesystem::path& path);
FiniteMdp load_mdp(const std::filesystem::path& path);

void save_policy(const PolicyMatrix& pi, const std::filesystem::path& path);
PolicyMatrix load_policy(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace opmdp
