#pragma once

#include <chrono>
#include <utility>

#include "opmdp/solvers.hpp"

namespace opmdp::detail {

struct StepOutcome {
  PolicyMatrix policy;
  double beta_used = 0.0;
  double inner_residual = 0.0;
};

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

/// Runs K = config.max_iters updates from `pi`. Each record holds the exact
/// objective of pi_k; wall_ms covers only advantage estimation and the update.
template <typename Step>
SolveResult run_policy_loop(const FiniteMdp& mdp, const SolverConfig& config,
                            AdvantageSource& source, PolicyMatrix pi, Step&& step) {
  SolveResult result{ValueFn(), pi, {}, false, 0.0, 0};
  double residual = 0.0;
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    RunRecord record;
    record.iteration = k;
    record.objective = objective(mdp, pi);
    record.samples_consumed = result.samples_consumed;
    if (config.keep_policies) record.policy_snapshot = pi;

    const auto start = std::chrono::steady_clock::now();
    AdvantageEstimate estimate = source.estimate(mdp, pi);
    StepOutcome outcome = step(k, pi, estimate);
    record.wall_ms = elapsed_ms(start);

    residual = (outcome.policy.probs() - pi.probs()).cwiseAbs().maxCoeff();
    record.residual = residual;
    record.beta_used = outcome.beta_used;
    record.inner_residual = outcome.inner_residual;
    result.samples_consumed += estimate.samples;
    result.history.push_back(std::move(record));
    pi = std::move(outcome.policy);
  }
  result.value = evaluate_policy(mdp, pi);
  result.final_objective = result.value.dot(mdp.rho());
  result.policy = std::move(pi);
  result.converged = residual <= config.tol;
  return result;
}

}  // namespace opmdp::detail
