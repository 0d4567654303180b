#include "opmdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "opmdp/errors.hpp"

namespace opmdp {

KernelMetric::KernelMetric(Eigen::MatrixXd r_matrix, Eigen::VectorXd weight_s)
    : r_matrix_(std::move(r_matrix)), weight_s_(std::move(weight_s)) {
  require(r_matrix_.rows() > 0 && r_matrix_.rows() == r_matrix_.cols(), "R must be square");
  require(weight_s_.size() > 0, "weight_s must be non-empty");
  require(r_matrix_.allFinite(), "R must be finite");
  require((r_matrix_ - r_matrix_.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "R must be symmetric");
  require((weight_s_.array() >= 1.0).all(), "weight_s entries must be >= 1");

  Eigen::LLT<Eigen::MatrixXd> llt(r_matrix_);
  require(llt.info() == Eigen::Success, "R must be positive definite");
  r_inverse_ = llt.solve(Eigen::MatrixXd::Identity(r_matrix_.rows(), r_matrix_.cols()));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r_matrix_, Eigen::EigenvaluesOnly);
  r_min_eigenvalue_ = eig.eigenvalues().minCoeff();
  r_max_eigenvalue_ = eig.eigenvalues().maxCoeff();
  require(r_min_eigenvalue_ > 0.0, "R must be positive definite");
}

KernelMetric KernelMetric::identity(Index n_states, Index n_actions) {
  return KernelMetric(Eigen::MatrixXd::Identity(n_actions, n_actions),
                      Eigen::VectorXd::Ones(n_states));
}

double mmd_squared(const KernelMetric& metric, const Eigen::Ref<const Eigen::VectorXd>& p1,
                   const Eigen::Ref<const Eigen::VectorXd>& p2) {
  require(p1.size() == metric.n_actions() && p2.size() == metric.n_actions(),
          "distribution length does not match n_actions");
  const Eigen::VectorXd d = p1 - p2;
  return std::max(0.0, 0.5 * d.dot(metric.r_matrix() * d));
}

double policy_ipm(const KernelMetric& metric, const PolicyMatrix& pi1, const PolicyMatrix& pi2) {
  require(pi1.n_states() == pi2.n_states() && pi1.n_actions() == pi2.n_actions(),
          "policy shapes differ");
  require(pi1.n_states() == metric.n_states(), "weight_s length does not match n_states");
  double best = 0.0;
  for (Index s = 0; s < pi1.n_states(); ++s) {
    const double mmd = std::sqrt(mmd_squared(metric, pi1.probs().row(s).transpose(),
                                             pi2.probs().row(s).transpose()));
    best = std::max(best, mmd / metric.weight_s()(s));
  }
  return best;
}

double action_seminorm(const KernelMetric& metric, const Eigen::Ref<const Eigen::VectorXd>& h) {
  require(h.size() == metric.n_actions(), "action function length does not match n_actions");
  return std::sqrt(std::max(0.0, 2.0 * h.dot(metric.r_inverse() * h)));
}

double q_seminorm(const KernelMetric& metric, const QFn& q) {
  double best = 0.0;
  for (Index s = 0; s < q.rows(); ++s) {
    best = std::max(best, action_seminorm(metric, q.row(s).transpose()));
  }
  return best;
}

namespace {

// Sign-flip coordinate ascent for max_{|v| <= w} y^T M y with y = B v.
// Returns the best quadratic value over `restarts` starting vertices.
double search_box_vertices(const Eigen::MatrixXd& b, const Eigen::VectorXd& w,
                           const Eigen::MatrixXd& m, int restarts, std::mt19937_64& rng) {
  const Index k = b.cols();
  const Eigen::MatrixXd mb = m * b;
  Eigen::VectorXd diag(k);
  for (Index j = 0; j < k; ++j) diag(j) = b.col(j).dot(mb.col(j));

  std::bernoulli_distribution coin(0.5);
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd v = w;
    if (r > 0) {
      for (Index j = 0; j < k; ++j) {
        if (coin(rng)) v(j) = -v(j);
      }
    }
    Eigen::VectorXd y = b * v;
    Eigen::VectorXd z = m * y;
    double f = y.dot(z);
    for (int pass = 0; pass < 100; ++pass) {
      bool improved = false;
      for (Index j = 0; j < k; ++j) {
        // Flipping v_j changes y by -2 v_j b_j.
        const double gain = -4.0 * v(j) * b.col(j).dot(z) + 4.0 * v(j) * v(j) * diag(j);
        if (gain > 1e-14 * std::max(1.0, f)) {
          y -= 2.0 * v(j) * b.col(j);
          z -= 2.0 * v(j) * mb.col(j);
          v(j) = -v(j);
          f += gain;
          improved = true;
        }
      }
      if (!improved) break;
    }
    best = std::max(best, y.dot(m * y));
  }
  return best;
}

}  // namespace

KappaEstimate kappa_p_details(const FiniteMdp& mdp, const KernelMetric& metric,
                              const KappaOptions& options) {
  require(metric.n_actions() == mdp.n_actions() && metric.n_states() == mdp.n_states(),
          "metric shape does not match the MDP");
  require(options.restarts >= 1, "kappa search needs at least one restart");
  require(options.safety_factor >= 1.0, "kappa safety factor must be >= 1");

  std::mt19937_64 rng(options.seed);
  const Eigen::VectorXd& w = metric.weight_s();
  const double lambda_max_inverse = 1.0 / metric.r_min_eigenvalue();

  double searched_sq = 0.0;
  double analytic_sq = 0.0;
  for (Index s = 0; s < mdp.n_states(); ++s) {
    const auto block = mdp.transition_block(s);
    std::vector<Index> support;
    for (Index j = 0; j < mdp.n_states(); ++j) {
      if ((block.col(j).array() != 0.0).any()) support.push_back(j);
    }
    Eigen::MatrixXd b(mdp.n_actions(), Index(support.size()));
    Eigen::VectorXd w_support(Index(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
      b.col(Index(i)) = block.col(support[i]);
      w_support(Index(i)) = w(support[i]);
    }
    const Eigen::VectorXd reach = b.cwiseAbs() * w_support;
    analytic_sq = std::max(analytic_sq, 2.0 * lambda_max_inverse * reach.squaredNorm());
    searched_sq = std::max(
        searched_sq, 2.0 * search_box_vertices(b, w_support, metric.r_inverse(), options.restarts, rng));
  }
  const double searched = std::sqrt(searched_sq);
  const double analytic = std::sqrt(analytic_sq);
  const double estimate = std::max(searched, std::min(options.safety_factor * searched, analytic));
  return KappaEstimate{estimate, searched, analytic};
}

double kappa_p_finite(const FiniteMdp& mdp, const KernelMetric& metric, const KappaOptions& options) {
  return kappa_p_details(mdp, metric, options).estimate;
}

double weighted_operator_norm(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& weight_s) {
  require(sigma.rows() == sigma.cols() && sigma.rows() == weight_s.size(),
          "operator and weight shapes differ");
  const Eigen::VectorXd row_mass = sigma.cwiseAbs() * weight_s;
  return (row_mass.array() / weight_s.array()).maxCoeff();
}

double majorization_beta(const FiniteMdp& mdp, const KernelMetric& metric, double kappa_p,
                         const PolicyMatrix& pi_prime, const QFn& q) {
  require(kappa_p >= 0.0, "kappa_P must be non-negative");
  const double sigma_norm = weighted_operator_norm(occupancy_resolvent(mdp, pi_prime), metric.weight_s());
  return kappa_p * sigma_norm * q_seminorm(metric, q);
}

double separable_majorization_beta(const FiniteMdp& mdp, const KernelMetric& metric,
                                   double kappa_p, const QFn& advantage_fn,
                                   const Eigen::VectorXd& occupancy) {
  require(kappa_p >= 0.0, "kappa_P must be non-negative");
  require(occupancy.size() == mdp.n_states(), "occupancy length does not match n_states");
  const double d_min = occupancy.minCoeff();
  require(d_min > 0.0, "certified separable beta needs positive visitation at every state");
  const Eigen::VectorXd& w = metric.weight_s();
  // ||sigma_{pi'}||_w <= (max w / min w) / (1 - gamma) for every policy pi'.
  const double sigma_bound = (w.maxCoeff() / w.minCoeff()) / (1.0 - mdp.gamma());
  return mdp.gamma() * kappa_p * sigma_bound * q_seminorm(metric, advantage_fn) /
         std::sqrt((1.0 - mdp.gamma()) * d_min);
}

}  // namespace opmdp
