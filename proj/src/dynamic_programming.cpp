#include <algorithm>
#include <chrono>
#include <cmath>

#include "opmdp/errors.hpp"
#include "opmdp/solvers.hpp"
#include "policy_loop.hpp"

namespace opmdp {

SolveResult value_iteration(const FiniteMdp& mdp, const SolverConfig& config) {
  config.validate();
  ValueFn v = ValueFn::Zero(mdp.n_states());
  SolveResult result{v, PolicyMatrix::uniform(mdp.n_states(), mdp.n_actions()), {}, false, 0.0, 0};

  for (std::size_t k = 0; k < config.max_iters; ++k) {
    const auto start = std::chrono::steady_clock::now();
    GreedyBackup backup = bellman_optimal(mdp, v);
    RunRecord record;
    record.wall_ms = detail::elapsed_ms(start);
    record.iteration = k;
    record.residual = (backup.value - v).lpNorm<Eigen::Infinity>();
    record.objective = backup.value.dot(mdp.rho());
    if (config.keep_policies) record.policy_snapshot = backup.policy;
    result.history.push_back(std::move(record));
    v = std::move(backup.value);
    if (result.history.back().residual <= config.tol) {
      result.converged = true;
      break;
    }
  }
  result.policy = bellman_optimal(mdp, v).policy;
  result.value = std::move(v);
  result.final_objective = objective(mdp, result.policy);
  return result;
}

SolveResult policy_iteration(const FiniteMdp& mdp, const SolverConfig& config,
                             const std::optional<PolicyMatrix>& initial) {
  config.validate();
  PolicyMatrix pi = initial.value_or(PolicyMatrix::uniform(mdp.n_states(), mdp.n_actions()));
  require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
          "initial policy shape does not match the MDP");
  SolveResult result{ValueFn(), pi, {}, false, 0.0, 0};

  for (std::size_t k = 0; k < config.max_iters; ++k) {
    const auto start = std::chrono::steady_clock::now();
    const ValueFn v = evaluate_policy(mdp, pi);
    const QFn q = q_from_value(mdp, v);
    std::vector<Index> actions = greedy_actions(q);
    if (pi.is_deterministic()) {
      // Keep the incumbent action on numerical ties so the loop cannot cycle.
      for (Index s = 0; s < mdp.n_states(); ++s) {
        Index current = 0;
        pi.probs().row(s).maxCoeff(&current);
        const double best = q(s, actions[std::size_t(s)]);
        if (q(s, current) <= best + 1e-12 * std::max(1.0, std::abs(best))) {
          actions[std::size_t(s)] = current;
        }
      }
    }
    PolicyMatrix next = PolicyMatrix::deterministic(actions, mdp.n_actions());

    RunRecord record;
    record.wall_ms = detail::elapsed_ms(start);
    record.iteration = k;
    record.objective = v.dot(mdp.rho());
    record.residual = (next.probs() - pi.probs()).cwiseAbs().maxCoeff();
    if (config.keep_policies) record.policy_snapshot = pi;
    result.history.push_back(std::move(record));

    const bool stable = next == pi;
    pi = std::move(next);
    if (stable) {
      result.converged = true;
      break;
    }
  }
  result.value = evaluate_policy(mdp, pi);
  result.final_objective = result.value.dot(mdp.rho());
  result.policy = std::move(pi);
  return result;
}

}  // namespace opmdp
