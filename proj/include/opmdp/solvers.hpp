#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opmdp/mdp.hpp"
#include "opmdp/metrics.hpp"

namespace opmdp {

enum class BetaMode {
  /// beta_k(s) = ||A_{pi_k}(s, .)||_inf / sqrt(k + 1)
  heuristic,
  /// state-separable majorization constant from separable_majorization_beta()
  certified,
};

std::string to_string(BetaMode mode);
BetaMode beta_mode_from_string(const std::string& name);

struct SolverConfig {
  std::size_t max_iters = 50;
  double tol = 1e-10;
  BetaMode beta_mode = BetaMode::heuristic;
  double eta0 = 1.15;
  std::size_t inner_iters = 1;
  double ppo_epsilon = 0.2;
  double ppo_lr = 0.8;
  std::size_t ppo_inner_iters = 10;
  double exponent_clip = 1.5;
  /// Trust-region radius schedule radius0 / sqrt(k + 1).
  double trpo_radius0 = 0.5;
  std::uint64_t seed = 0;
  /// Keep pi_k in every RunRecord (used for ground-truth re-scoring).
  bool keep_policies = false;

  void validate() const;
};

struct RunRecord {
  std::size_t iteration = 0;
  /// <v_{pi_k}, rho> for policy methods; <v_k, rho> of the iterate for value iteration.
  double objective = 0.0;
  /// Sup-norm change of the iterate (value or policy) produced at this iteration.
  double residual = 0.0;
  double beta_used = 0.0;
  double inner_residual = 0.0;
  double wall_ms = 0.0;
  /// Environment steps consumed before pi_k was produced (0 for exact advantages).
  std::uint64_t samples_consumed = 0;
  std::optional<PolicyMatrix> policy_snapshot;
};

struct SolveResult {
  ValueFn value;
  PolicyMatrix policy;
  std::vector<RunRecord> history;
  bool converged = false;
  /// <v_pi, rho> of the returned policy.
  double final_objective = 0.0;
  std::uint64_t samples_consumed = 0;
};

/// CSV with columns iteration,objective,residual,beta_used,inner_residual,wall_ms.
std::string history_to_csv(const std::vector<RunRecord>& history);

/// Advantage and state weighting fed to the iterative policy solvers.
struct AdvantageEstimate {
  QFn advantage;
  /// Discounted state visitation d = sigma*_pi rho (or its sample estimate).
  Eigen::VectorXd occupancy;
  std::uint64_t samples = 0;
};

class AdvantageSource {
 public:
  virtual ~AdvantageSource() = default;
  virtual AdvantageEstimate estimate(const FiniteMdp& mdp, const PolicyMatrix& pi) = 0;
  virtual bool sample_based() const = 0;
};

/// Closed-form A_pi and sigma*_pi rho from the model.
class ExactAdvantage final : public AdvantageSource {
 public:
  AdvantageEstimate estimate(const FiniteMdp& mdp, const PolicyMatrix& pi) override;
  bool sample_based() const override { return false; }
};

// ---------------------------------------------------------------------------
// Dynamic programming

SolveResult value_iteration(const FiniteMdp& mdp, const SolverConfig& config);
SolveResult policy_iteration(const FiniteMdp& mdp, const SolverConfig& config,
                             const std::optional<PolicyMatrix>& initial = std::nullopt);

// ---------------------------------------------------------------------------
// PPO (tabular, cost-minimizing clipped surrogate)

double clip(double x, double lo, double hi);

/// max{ratio A, clip(ratio, 1 - eps, 1 + eps) A}.
double cpi(double ratio, double adv, double epsilon);

/// sum_s d(s) sum_a pi_k(a|s) cpi(theta(a|s) / pi_k(a|s), A(s,a)); actions with
/// pi_k(a|s) = 0 are skipped.
double ppo_surrogate(const PolicyMatrix& pi_k, const PolicyMatrix& theta, const QFn& advantage_fn,
                     const Eigen::VectorXd& occupancy, double epsilon);

/**
 * ppo_inner_iters steps of projected (sub)gradient descent on the clipped
 * surrogate, per state, with step ppo_lr. Iterates stay on the face of the
 * simplex supported by pi_k, so actions with pi_k(a|s) = 0 never gain mass.
 */
PolicyMatrix ppo_update(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& advantage_fn,
                        const SolverConfig& config, const Eigen::VectorXd& occupancy);
PolicyMatrix ppo_update(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& advantage_fn,
                        const SolverConfig& config);

// ---------------------------------------------------------------------------
// Policy mirror descent with KL(p || pi_k)

PolicyMatrix mirror_descent_update(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& q_fn,
                                   double eta);

// ---------------------------------------------------------------------------
// MM-RKHS

/**
 * One multiplicative step
 *   theta_a = -eta (A_a - beta R_a^T (pi - p_l)),
 *   p_{l+1,a} = p_{l,a} exp(theta_a) / Z.
 * With `exponent_clip`, each theta_a is clamped to [-clip, clip] first.
 */
Eigen::VectorXd mm_rkhs_inner_step(const Eigen::Ref<const Eigen::VectorXd>& adv_row,
                                   const Eigen::Ref<const Eigen::VectorXd>& pi_row,
                                   const Eigen::Ref<const Eigen::VectorXd>& p_l, double beta,
                                   double eta, const Eigen::MatrixXd& r_matrix,
                                   std::optional<double> exponent_clip = std::nullopt);

/// Heuristic schedule beta_k(s) = ||A(s, .)||_inf / sqrt(k + 1).
Eigen::VectorXd heuristic_beta(const QFn& advantage_fn, std::size_t k);

SolveResult mm_rkhs_solve(const FiniteMdp& mdp, const KernelMetric& metric,
                          const SolverConfig& config, AdvantageSource& source,
                          const std::optional<PolicyMatrix>& initial = std::nullopt);

// ---------------------------------------------------------------------------
// OTPG and IPM trust region

struct RowSolve {
  Eigen::VectorXd p;
  double residual = 0.0;    ///< projected-gradient mapping norm (OTPG) or KKT residual (TRPO)
  double multiplier = 0.0;  ///< Lagrange multiplier of the trust-region constraint
  std::size_t iterations = 0;
  bool converged = true;
};

/// argmin_p A^T p + beta MMD(pi, p)^2 over the simplex.
RowSolve otpg_row(const Eigen::Ref<const Eigen::VectorXd>& adv_row,
                  const Eigen::Ref<const Eigen::VectorXd>& pi_row, double beta,
                  const KernelMetric& metric, double tol = 1e-8, std::size_t max_steps = 10000);

/// argmin_p A^T p s.t. MMD(pi, p)^2 <= radius_sq over the simplex.
RowSolve trpo_row(const Eigen::Ref<const Eigen::VectorXd>& adv_row,
                  const Eigen::Ref<const Eigen::VectorXd>& pi_row, double radius_sq,
                  const KernelMetric& metric);

struct PolicyUpdate {
  PolicyMatrix policy;
  double max_residual = 0.0;
  bool converged = true;
};

/// Per-state OTPG step with weight beta_k(s) w_S(s) on the squared MMD.
PolicyUpdate otpg_update(const FiniteMdp& mdp, const KernelMetric& metric, const PolicyMatrix& pi_k,
                         const QFn& advantage_fn, const Eigen::VectorXd& beta_k);
PolicyUpdate otpg_update(const FiniteMdp& mdp, const KernelMetric& metric, const PolicyMatrix& pi_k,
                         const QFn& advantage_fn, double beta_k);

/// Per-state trust-region step with MMD(pi_k(s), p)^2 <= radius^2 w_S(s)^2.
PolicyUpdate trpo_constrained_update(const FiniteMdp& mdp, const KernelMetric& metric,
                                     const PolicyMatrix& pi_k, const QFn& advantage_fn,
                                     double radius);

// ---------------------------------------------------------------------------
// Iterative drivers (K = max_iters policy updates from the uniform policy)

SolveResult ppo_solve(const FiniteMdp& mdp, const SolverConfig& config, AdvantageSource& source);
SolveResult mirror_descent_solve(const FiniteMdp& mdp, const SolverConfig& config,
                                 AdvantageSource& source);
SolveResult otpg_solve(const FiniteMdp& mdp, const KernelMetric& metric, const SolverConfig& config,
                       AdvantageSource& source);
SolveResult trpo_solve(const FiniteMdp& mdp, const KernelMetric& metric, const SolverConfig& config,
                       AdvantageSource& source);

/// value_iteration, policy_iteration, ppo, mirror_descent, otpg, trpo, mm_rkhs.
const std::vector<std::string>& solver_names();

/// Dispatch by name; `source` is ignored by the dynamic-programming solvers.
SolveResult solve(const std::string& name, const FiniteMdp& mdp, const KernelMetric& metric,
                  const SolverConfig& config, AdvantageSource& source);

}  // namespace opmdp
