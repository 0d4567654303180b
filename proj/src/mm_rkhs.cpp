#include <algorithm>
#include <cmath>
#include <limits>

#include "opmdp/errors.hpp"
#include "opmdp/solvers.hpp"
#include "policy_loop.hpp"

namespace opmdp {

namespace {

bool is_distribution(const Eigen::Ref<const Eigen::VectorXd>& p) {
  return (p.array() >= 0.0).all() && std::abs(p.sum() - 1.0) <= 1e-10;
}

}  // namespace

Eigen::VectorXd mm_rkhs_inner_step(const Eigen::Ref<const Eigen::VectorXd>& adv_row,
                                   const Eigen::Ref<const Eigen::VectorXd>& pi_row,
                                   const Eigen::Ref<const Eigen::VectorXd>& p_l, double beta,
                                   double eta, const Eigen::MatrixXd& r_matrix,
                                   std::optional<double> exponent_clip) {
  const Index m = adv_row.size();
  require(pi_row.size() == m && p_l.size() == m && r_matrix.rows() == m && r_matrix.cols() == m,
          "inner step dimensions differ");
  require(is_distribution(pi_row) && is_distribution(p_l), "inner step needs probability vectors");
  require(beta >= 0.0 && eta >= 0.0, "beta and eta must be non-negative");

  Eigen::VectorXd exponent = -eta * (adv_row - beta * (r_matrix * (pi_row - p_l)));
  if (exponent_clip) {
    exponent = exponent.cwiseMax(-*exponent_clip).cwiseMin(*exponent_clip);
  }
  // Only actions carrying mass contribute to Z; shifting by their max exponent
  // keeps exp() from overflowing or underflowing without changing the result.
  double top = -std::numeric_limits<double>::infinity();
  for (Index a = 0; a < m; ++a) {
    if (p_l(a) > 0.0) top = std::max(top, exponent(a));
  }
  Eigen::VectorXd next = p_l.array() * (exponent.array() - top).exp();
  const double z = next.sum();
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("inner step normalizer is not positive");
  return next / z;
}

Eigen::VectorXd heuristic_beta(const QFn& advantage_fn, std::size_t k) {
  return advantage_fn.cwiseAbs().rowwise().maxCoeff() / std::sqrt(double(k + 1));
}

SolveResult mm_rkhs_solve(const FiniteMdp& mdp, const KernelMetric& metric,
                          const SolverConfig& config, AdvantageSource& source,
                          const std::optional<PolicyMatrix>& initial) {
  config.validate();
  require(metric.n_actions() == mdp.n_actions() && metric.n_states() == mdp.n_states(),
          "metric shape does not match the MDP");
  PolicyMatrix pi0 = initial.value_or(PolicyMatrix::uniform(mdp.n_states(), mdp.n_actions()));
  require(pi0.n_states() == mdp.n_states() && pi0.n_actions() == mdp.n_actions(),
          "initial policy shape does not match the MDP");

  double kappa = 0.0;
  if (config.beta_mode == BetaMode::certified) {
    kappa = kappa_p_finite(mdp, metric, KappaOptions{8, 1.5, config.seed});
  }
  const std::optional<double> clip_at =
      source.sample_based() ? std::optional<double>(config.exponent_clip) : std::nullopt;
  const Eigen::MatrixXd& r = metric.r_matrix();

  return detail::run_policy_loop(
      mdp, config, source, std::move(pi0),
      [&](std::size_t k, const PolicyMatrix& pi, const AdvantageEstimate& est) {
        const QFn& adv = est.advantage;
        double eta = config.eta0 * double(k + 1);
        Eigen::VectorXd beta;
        if (config.beta_mode == BetaMode::certified) {
          const double b = separable_majorization_beta(mdp, metric, kappa, adv, est.occupancy);
          beta = Eigen::VectorXd::Constant(mdp.n_states(), b);
          // Multiplicative steps decrease the per-state surrogate monotonically
          // once eta <= 1 / (beta max|R_ij|).
          if (b > 0.0) eta = std::min(eta, 1.0 / (b * metric.r_max_abs_entry()));
        } else {
          beta = heuristic_beta(adv, k);
        }

        Eigen::MatrixXd next(mdp.n_states(), mdp.n_actions());
        double inner_residual = 0.0;
        for (Index s = 0; s < mdp.n_states(); ++s) {
          const Eigen::VectorXd pi_row = pi.probs().row(s).transpose();
          const Eigen::VectorXd adv_row = adv.row(s).transpose();
          Eigen::VectorXd p = pi_row;
          for (std::size_t l = 0; l < config.inner_iters; ++l) {
            Eigen::VectorXd stepped = mm_rkhs_inner_step(adv_row, pi_row, p, beta(s), eta, r, clip_at);
            if (l + 1 == config.inner_iters) {
              inner_residual = std::max(inner_residual, (stepped - p).lpNorm<1>());
            }
            p = std::move(stepped);
          }
          next.row(s) = p.transpose();
        }
        return detail::StepOutcome{PolicyMatrix(std::move(next)), beta.mean(), inner_residual};
      });
}

}  // namespace opmdp
