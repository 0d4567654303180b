#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "opmdp/mdp.hpp"

namespace opmdp {

/**
 * Action-kernel metric for finite MDPs.
 *
 * `r_matrix` is the SPD action kernel R; the squared MMD between two action
 * distributions is 1/2 (p1 - p2)^T R (p1 - p2). `weight_s` is the state weight
 * function w_S (entries >= 1) used by the weighted policy metric.
 */
class KernelMetric {
 public:
  KernelMetric(Eigen::MatrixXd r_matrix, Eigen::VectorXd weight_s);

  /// R = I and w_S = 1.
  static KernelMetric identity(Index n_states, Index n_actions);

  Index n_states() const { return weight_s_.size(); }
  Index n_actions() const { return r_matrix_.rows(); }
  const Eigen::MatrixXd& r_matrix() const { return r_matrix_; }
  const Eigen::VectorXd& weight_s() const { return weight_s_; }
  const Eigen::MatrixXd& r_inverse() const { return r_inverse_; }
  double r_max_eigenvalue() const { return r_max_eigenvalue_; }
  double r_min_eigenvalue() const { return r_min_eigenvalue_; }
  /// max_{a,a'} |R_{aa'}|; the l1 -> l_inf Lipschitz constant of p -> R p.
  double r_max_abs_entry() const { return r_matrix_.cwiseAbs().maxCoeff(); }

 private:
  Eigen::MatrixXd r_matrix_;
  Eigen::VectorXd weight_s_;
  Eigen::MatrixXd r_inverse_;
  double r_max_eigenvalue_ = 0.0;
  double r_min_eigenvalue_ = 0.0;
};

double mmd_squared(const KernelMetric& metric, const Eigen::Ref<const Eigen::VectorXd>& p1,
                   const Eigen::Ref<const Eigen::VectorXd>& p2);

/// sup_s MMD(pi1(.|s), pi2(.|s)) / w_S(s).
double policy_ipm(const KernelMetric& metric, const PolicyMatrix& pi1, const PolicyMatrix& pi2);

/// Dual norm of an action function h: sqrt(2 h^T R^{-1} h). For any pair of
/// action distributions, |<h, p1 - p2>| <= action_seminorm(h) * MMD(p1, p2).
double action_seminorm(const KernelMetric& metric, const Eigen::Ref<const Eigen::VectorXd>& h);

/// max_s action_seminorm(q(s, .)): the gauge of q with respect to the metric.
double q_seminorm(const KernelMetric& metric, const QFn& q);

struct KappaEstimate {
  double estimate;        ///< min(safety_factor * searched, analytic_bound)
  double searched;        ///< best value found by the sign-vertex local search
  double analytic_bound;  ///< sqrt(2 lambda_max(R^{-1}) ||P_s |w| ||^2), maximized over s
};

struct KappaOptions {
  int restarts = 8;
  double safety_factor = 1.5;
  std::uint64_t seed = 0;
};

/**
 * Estimate of the constant kappa_P with rho(P v) <= kappa_P ||v||_w.
 *
 * The supremum of the convex map v -> max_s action_seminorm(P_s v) over the
 * weighted box |v| <= w_S is attained at a vertex, so it is searched by
 * coordinate sign-flip ascent from the all-positive vertex and seeded random
 * vertices. The search value is inflated by `safety_factor` and capped by the
 * analytic bound, which is a true upper bound.
 */
KappaEstimate kappa_p_details(const FiniteMdp& mdp, const KernelMetric& metric,
                              const KappaOptions& options = {});
double kappa_p_finite(const FiniteMdp& mdp, const KernelMetric& metric,
                      const KappaOptions& options = {});

/// Operator norm of sigma in the weighted sup norm:
/// max_s sum_{s'} |sigma(s, s')| w(s') / w(s).
double weighted_operator_norm(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& weight_s);

/// beta(q, pi') = kappa_P ||sigma_{pi'}|| rho(q): the constant making
/// v_{pi'} - v_pi <= L_pi(pi') + sigma_pi beta w_S IPM(pi, pi')^2 hold.
double majorization_beta(const FiniteMdp& mdp, const KernelMetric& metric, double kappa_p,
                         const PolicyMatrix& pi_prime, const QFn& q);

/**
 * Scalar beta for which the state-separable surrogate
 *   sum_s d(s) [ A(s, .)^T p_s + beta MMD(pi(s), p_s)^2 ]
 * upper-bounds J_{pi'} - J_pi for every pi' (d = adjoint occupancy of pi).
 *
 * Derived from the sup-metric bound by
 *   (sum_s d MMD_s) max_s MMD_s <= sum_s d MMD_s^2 / sqrt((1 - gamma) min_s d),
 * giving beta = gamma kappa_P ||sigma||_max rho(A) / sqrt((1 - gamma) min_s d).
 */
double separable_majorization_beta(const FiniteMdp& mdp, const KernelMetric& metric,
                                   double kappa_p, const QFn& advantage_fn,
                                   const Eigen::VectorXd& occupancy);

}  // namespace opmdp
