#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "opmdp/garnet.hpp"
#include "opmdp/mdp.hpp"
#include "opmdp/metrics.hpp"

namespace opmdp {

struct VerificationReport {
  std::string check_name;
  double max_abs_error = 0.0;
  std::size_t instances_tested = 0;
  std::uint64_t worst_seed = 0;
  bool passed = true;
  double tolerance = 1e-8;

  // Triage extras; NaN when the check does not produce them.
  double condition_number = std::numeric_limits<double>::quiet_NaN();
  /// Fitted log-log slope of the Gateaux difference-quotient error (worst over instances).
  double slope = std::numeric_limits<double>::quiet_NaN();
  /// Minimum slack of the majorization inequality.
  double min_slack = std::numeric_limits<double>::quiet_NaN();

  /// Fold another report (typically one instance) into this aggregate.
  void absorb(const VerificationReport& other, std::uint64_t seed);
  /// Recompute `passed` from max_abs_error and tolerance.
  void finalize();
};

/// A = I - gamma P_pi, B = -gamma (P_pi' - P_pi): checks
/// (A + eps B)^{-1} = A^{-1} - eps (A + eps B)^{-1} B A^{-1} = A^{-1} - eps A^{-1} B (A + eps B)^{-1}
///                  = A^{-1} - eps A^{-1} B A^{-1} + eps^2 A^{-1} B (A + eps B)^{-1} B A^{-1}.
VerificationReport check_perturbation_identity(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                               const PolicyMatrix& pi_prime, double epsilon);

/// v_pi' - v_pi = sigma_pi' dq = L_pi(pi') + gamma sigma_pi P_D sigma_pi' dq
///              = L_pi(pi') + gamma sigma_pi' P_D sigma_pi dq, and dq = pi' A_pi.
VerificationReport check_policy_difference(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                           const PolicyMatrix& pi_prime);

/**
 * Difference quotients (v_{pi_eps} - v_pi) / eps along pi_eps = pi + eps (pi' - pi).
 * max_abs_error is the deviation from the exact remainder
 *   v_eps - v - eps L = eps^2 gamma sigma_pi P_D sigma_{pi_eps} dq;
 * `slope` is the least-squares slope of log ||quotient - L|| against log eps,
 * fitted over the eps whose error sits clear of rounding noise. The check fails
 * when a slope can be fitted and falls outside [0.9, 1.1].
 */
VerificationReport check_gateaux_derivative(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                            const PolicyMatrix& pi_prime,
                                            const std::vector<double>& epsilons);

/// v_pi' - v_pi <= L_pi(pi') + sigma_pi (beta w_S IPM(pi, pi')^2) entrywise and paired with
/// the adjoint occupancy; max_abs_error is the largest violation (0 when all slack >= 0).
VerificationReport check_majorization(const FiniteMdp& mdp, const KernelMetric& metric,
                                      const PolicyMatrix& pi, const PolicyMatrix& pi_prime,
                                      double beta);

/// Power-iteration radius of gamma P_pi must not exceed gamma + 1e-6; Neumann partial sums
/// of v_pi at T = 1000 must sit inside gamma^T ||c||/(1 - gamma) of the linear solve; v_pi >= 0.
VerificationReport check_spectral_stability(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// <L_{pi*}(pi'), rho> >= -1e-8 for `directions` random pi'.
VerificationReport check_first_order_optimality(const FiniteMdp& mdp, const PolicyMatrix& pi_star,
                                                std::size_t directions, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Batch suites

/// One row per (check, instance), for CSV output.
struct InstanceResult {
  std::string check_name;
  std::uint64_t seed;
  double max_abs_error;
  bool passed;
};

struct SuiteResult {
  std::vector<VerificationReport> reports;
  std::vector<InstanceResult> instances;

  bool all_passed() const;
};

/// Random policy with Dirichlet(1) rows; with probability 1/4 a row is a vertex.
PolicyMatrix random_policy(Index n_states, Index n_actions, std::mt19937_64& rng);

/// Random SPD Gaussian-kernel metric with w_S in [1, 2).
KernelMetric random_metric(Index n_states, Index n_actions, std::mt19937_64& rng);

/// Perturbation, policy difference, Gateaux and spectral checks on `n_instances` GARNETs with
/// n <= 50, m <= 10, gamma in {0.5, 0.9, 0.95}.
SuiteResult run_identity_suite(std::uint64_t master_seed, std::size_t n_instances);

/// check_majorization with certified beta over `pairs` policy pairs on each of `n_mdps` 20x5 MDPs.
SuiteResult run_majorization_suite(std::uint64_t master_seed, std::size_t n_mdps,
                                   std::size_t pairs);

/// Lyapunov, kappa domination, completing-square and Riccati checks on `n_systems` systems.
SuiteResult run_lqr_suite(std::uint64_t master_seed, std::size_t n_systems);

/// Header check_name,seed,max_abs_error,passed.
std::string instances_to_csv(const std::vector<InstanceResult>& rows);

/// One human-readable line per report.
std::string format_report(const VerificationReport& report);

}  // namespace opmdp
