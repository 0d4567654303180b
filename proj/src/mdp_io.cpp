#include "opmdp/mdp_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "opmdp/errors.hpp"

namespace opmdp {

namespace {

std::vector<double> flatten_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(std::size_t(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::MatrixXd unflatten_row_major(const std::vector<double>& flat, Index rows, Index cols,
                                    const char* field) {
  if (Index(flat.size()) != rows * cols) {
    throw ContractViolation(std::string("field '") + field + "' has " +
                            std::to_string(flat.size()) + " entries, expected " +
                            std::to_string(rows * cols));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = flat[std::size_t(r * cols + c)];
  }
  return m;
}

template <typename T>
T field(const nlohmann::json& doc, const char* name) {
  if (!doc.contains(name)) throw ContractViolation(std::string("missing field '") + name + "'");
  try {
    return doc.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("bad field '") + name + "': " + e.what());
  }
}

}  // namespace

nlohmann::json mdp_to_json(const FiniteMdp& mdp) {
  nlohmann::json doc;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["gamma"] = mdp.gamma();
  doc["rho"] = std::vector<double>(mdp.rho().data(), mdp.rho().data() + mdp.rho().size());
  doc["cost"] = flatten_row_major(mdp.cost());
  doc["transition"] = flatten_row_major(mdp.transition());
  return doc;
}

FiniteMdp mdp_from_json(const nlohmann::json& doc) {
  const auto n = field<Index>(doc, "n_states");
  const auto m = field<Index>(doc, "n_actions");
  require(n > 0 && m > 0, "n_states and n_actions must be positive");
  const auto rho_flat = field<std::vector<double>>(doc, "rho");
  require(Index(rho_flat.size()) == n, "field 'rho' must have n_states entries");
  Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(rho_flat.data(), n);
  return FiniteMdp(unflatten_row_major(field<std::vector<double>>(doc, "cost"), n, m, "cost"),
                   unflatten_row_major(field<std::vector<double>>(doc, "transition"), n * m, n,
                                       "transition"),
                   field<double>(doc, "gamma"), std::move(rho));
}

nlohmann::json policy_to_json(const PolicyMatrix& pi) {
  nlohmann::json doc;
  doc["n_states"] = pi.n_states();
  doc["n_actions"] = pi.n_actions();
  doc["probs"] = flatten_row_major(pi.probs());
  return doc;
}

PolicyMatrix policy_from_json(const nlohmann::json& doc) {
  const auto n = field<Index>(doc, "n_states");
  const auto m = field<Index>(doc, "n_actions");
  require(n > 0 && m > 0, "n_states and n_actions must be positive");
  return PolicyMatrix(unflatten_row_major(field<std::vector<double>>(doc, "probs"), n, m, "probs"));
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractViolation("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_mdp(const FiniteMdp& mdp, const std::filesystem::path& path) {
  write_text_file(path, mdp_to_json(mdp).dump() + "\n");
}

FiniteMdp load_mdp(const std::filesystem::path& path) { return mdp_from_json(read_json_file(path)); }

void save_policy(const PolicyMatrix& pi, const std::filesystem::path& path) {
  write_text_file(path, policy_to_json(pi).dump() + "\n");
}

PolicyMatrix load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_json_file(path));
}

}  // namespace opmdp
