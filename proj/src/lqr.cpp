#include "opmdp/lqr.hpp"

#include <cmath>

#include "opmdp/errors.hpp"

namespace opmdp::lqr {

void LqrSystem::validate() const {
  const auto n = a_matrix.rows();
  require(a_matrix.cols() == n && n >= 1, "A must be square");
  require(b_matrix.rows() == n, "B must have as many rows as A");
  require(q_cost.rows() == n && q_cost.cols() == n, "Q must be n x n");
  const auto m = b_matrix.cols();
  require(r_cost.rows() == m && r_cost.cols() == m, "R must be m x m");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require((q_cost - q_cost.transpose()).cwiseAbs().maxCoeff() <= 1e-10, "Q must be symmetric");
  require(m == 0 || (r_cost - r_cost.transpose()).cwiseAbs().maxCoeff() <= 1e-10,
          "R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eig(q_cost, Eigen::EigenvaluesOnly);
  require(q_eig.eigenvalues().minCoeff() >= -1e-10, "Q must be positive semidefinite");
  if (m > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> r_eig(r_cost, Eigen::EigenvaluesOnly);
    require(r_eig.eigenvalues().minCoeff() > 0.0, "R must be positive definite");
  }
}

namespace {

Eigen::MatrixXd closed_loop(const LqrSystem& sys, const LinearPolicy& policy) {
  sys.validate();
  require(policy.k_gain.rows() == sys.n_inputs() && policy.k_gain.cols() == sys.n_states(),
          "gain must be m x n");
  require(policy.k_gain.allFinite(), "gain entries must be finite");
  return sys.a_matrix - sys.b_matrix * policy.k_gain;
}

}  // namespace

double closed_loop_spectral_radius(const LqrSystem& sys, const LinearPolicy& policy) {
  const Eigen::MatrixXd loop = std::sqrt(sys.gamma) * closed_loop(sys, policy);
  Eigen::EigenSolver<Eigen::MatrixXd> eig(loop, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd evaluate_linear_policy(const LqrSystem& sys, const LinearPolicy& policy, double tol,
                                       int max_iters) {
  const Eigen::MatrixXd loop = closed_loop(sys, policy);
  require(closed_loop_spectral_radius(sys, policy) < 1.0,
          "closed loop is not spectrally stable; value is undefined");
  const Eigen::MatrixXd stage = sys.q_cost + policy.k_gain.transpose() * sys.r_cost * policy.k_gain;
  Eigen::MatrixXd v = stage;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd next = stage + sys.gamma * loop.transpose() * v * loop;
    next = 0.5 * (next + next.transpose());
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change <= tol * std::max(1.0, v.cwiseAbs().maxCoeff())) return v;
  }
  throw NumericalError("Lyapunov iteration did not converge");
}

double lqr_kappa_p(const LqrSystem& sys) {
  sys.validate();
  auto sigma_max = [](const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  };
  const double a = sigma_max(sys.a_matrix);
  const double b = sigma_max(sys.b_matrix);
  return 2.0 * (a * a + b * b);
}

LinearPolicy completing_square_minimizer(const LqrSystem& sys, const Eigen::MatrixXd& q_matrix,
                                         double lambda) {
  sys.validate();
  require(q_matrix.rows() == sys.n_states() && q_matrix.cols() == sys.n_states(),
          "q_matrix must be n x n");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  const Eigen::MatrixXd cross = sys.b_matrix.transpose() * q_matrix * sys.a_matrix;
  return LinearPolicy{lambda * sys.r_cost.llt().solve(cross)};
}

double completing_square_objective(const LqrSystem& sys, const Eigen::MatrixXd& q_matrix,
                                   double lambda, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& a) {
  return x.dot(q_matrix * x) + a.dot(sys.r_cost * a) +
         2.0 * lambda * x.dot(sys.a_matrix.transpose() * q_matrix * sys.b_matrix * a);
}

}  // namespace opmdp::lqr
