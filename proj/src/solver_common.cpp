#include <cstdio>
#include <string>

#include "opmdp/errors.hpp"
#include "opmdp/solvers.hpp"

namespace opmdp {

std::string to_string(BetaMode mode) {
  return mode == BetaMode::certified ? "certified" : "heuristic";
}

BetaMode beta_mode_from_string(const std::string& name) {
  if (name == "heuristic") return BetaMode::heuristic;
  if (name == "certified") return BetaMode::certified;
  throw ContractViolation("unknown beta_mode '" + name + "'");
}

void SolverConfig::validate() const {
  require(max_iters > 0, "max_iters must be positive");
  require(tol > 0.0, "tol must be positive");
  require(eta0 > 0.0, "eta0 must be positive");
  require(inner_iters > 0, "inner_iters must be positive");
  require(ppo_epsilon > 0.0 && ppo_epsilon < 1.0, "ppo_epsilon must lie in (0, 1)");
  require(ppo_lr > 0.0, "ppo_lr must be positive");
  require(ppo_inner_iters > 0, "ppo_inner_iters must be positive");
  require(exponent_clip > 0.0, "exponent_clip must be positive");
  require(trpo_radius0 > 0.0, "trpo_radius0 must be positive");
}

std::string history_to_csv(const std::vector<RunRecord>& history) {
  std::string out = "iteration,objective,residual,beta_used,inner_residual,wall_ms\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.iteration, r.objective,
                  r.residual, r.beta_used, r.inner_residual, r.wall_ms);
    out += line;
  }
  return out;
}

AdvantageEstimate ExactAdvantage::estimate(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  return AdvantageEstimate{advantage(mdp, pi), adjoint_occupancy(mdp, pi), 0};
}

const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names = {"value_iteration", "policy_iteration", "ppo",
                                                 "mirror_descent",  "otpg",             "trpo",
                                                 "mm_rkhs"};
  return names;
}

SolveResult solve(const std::string& name, const FiniteMdp& mdp, const KernelMetric& metric,
                  const SolverConfig& config, AdvantageSource& source) {
  if (name == "value_iteration") return value_iteration(mdp, config);
  if (name == "policy_iteration") return policy_iteration(mdp, config);
  if (name == "ppo") return ppo_solve(mdp, config, source);
  if (name == "mirror_descent") return mirror_descent_solve(mdp, config, source);
  if (name == "otpg") return otpg_solve(mdp, metric, config, source);
  if (name == "trpo") return trpo_solve(mdp, metric, config, source);
  if (name == "mm_rkhs") return mm_rkhs_solve(mdp, metric, config, source);
  throw ContractViolation("unknown solver '" + name + "'");
}

}  // namespace opmdp
