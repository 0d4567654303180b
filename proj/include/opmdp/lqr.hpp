#pragma once

#include <Eigen/Dense>

namespace opmdp::lqr {

/// x_{t+1} = A x_t + B u_t with per-step cost x'Qx + u'Ru.
struct LqrSystem {
  Eigen::MatrixXd a_matrix;
  Eigen::MatrixXd b_matrix;
  Eigen::MatrixXd q_cost;
  Eigen::MatrixXd r_cost;
  double gamma = 1.0;

  void validate() const;
  Eigen::Index n_states() const { return a_matrix.rows(); }
  Eigen::Index n_inputs() const { return b_matrix.cols(); }
};

/// u = -K x.
struct LinearPolicy {
  Eigen::MatrixXd k_gain;
};

/// Spectral radius of sqrt(gamma) (A - BK).
double closed_loop_spectral_radius(const LqrSystem& sys, const LinearPolicy& policy);

/**
 * V with v(x) = x'Vx, from V <- Q + K'RK + gamma (A-BK)' V (A-BK) iterated until the
 * sup-norm change drops below `tol`. Throws ContractViolation for unstable loops.
 */
Eigen::MatrixXd evaluate_linear_policy(const LqrSystem& sys, const LinearPolicy& policy,
                                       double tol = 1e-13, int max_iters = 1000000);

/// 2 (||A||_2^2 + ||B||_2^2).
double lqr_kappa_p(const LqrSystem& sys);

/// Gain K = lambda R^{-1} B' Q A; a = -Kx minimizes completing_square_objective(x, .).
LinearPolicy completing_square_minimizer(const LqrSystem& sys, const Eigen::MatrixXd& q_matrix,
                                         double lambda);

/// q(x, a) = x'Qx + a'Ra + 2 lambda x'A'QBa, with Q = q_matrix and R = sys.r_cost.
double completing_square_objective(const LqrSystem& sys, const Eigen::MatrixXd& q_matrix,
                                   double lambda, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& a);

}  // namespace opmdp::lqr
