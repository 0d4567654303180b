#include <algorithm>
#include <cmath>
#include <limits>

#include "opmdp/errors.hpp"
#include "opmdp/simplex.hpp"
#include "opmdp/solvers.hpp"
#include "policy_loop.hpp"

namespace opmdp {

namespace {

void check_update_shapes(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& fn) {
  require(pi_k.n_states() == mdp.n_states() && pi_k.n_actions() == mdp.n_actions(),
          "policy shape does not match the MDP");
  require(fn.rows() == mdp.n_states() && fn.cols() == mdp.n_actions(),
          "advantage shape does not match the MDP");
  require(fn.allFinite(), "advantage must be finite");
}

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& row) {
  const double span = row.maxCoeff() - row.minCoeff();
  return span <= 1e-15 * std::max(1.0, row.cwiseAbs().maxCoeff());
}

Eigen::VectorXd vertex(Index size, Index at) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
  e(at) = 1.0;
  return e;
}

Index lowest_argmin(const Eigen::Ref<const Eigen::VectorXd>& row) {
  Index best = 0;
  for (Index a = 1; a < row.size(); ++a) {
    if (row(a) < row(best)) best = a;
  }
  return best;
}

PolicyMatrix uniform_like(const FiniteMdp& mdp) {
  return PolicyMatrix::uniform(mdp.n_states(), mdp.n_actions());
}

}  // namespace

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double cpi(double ratio, double adv, double epsilon) {
  return std::max(ratio * adv, clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * adv);
}

double ppo_surrogate(const PolicyMatrix& pi_k, const PolicyMatrix& theta, const QFn& advantage_fn,
                     const Eigen::VectorXd& occupancy, double epsilon) {
  double total = 0.0;
  for (Index s = 0; s < pi_k.n_states(); ++s) {
    double row = 0.0;
    for (Index a = 0; a < pi_k.n_actions(); ++a) {
      if (pi_k(s, a) <= 0.0) continue;
      row += pi_k(s, a) * cpi(theta(s, a) / pi_k(s, a), advantage_fn(s, a), epsilon);
    }
    total += occupancy(s) * row;
  }
  return total;
}

PolicyMatrix ppo_update(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& advantage_fn,
                        const SolverConfig& config, const Eigen::VectorXd& occupancy) {
  check_update_shapes(mdp, pi_k, advantage_fn);
  config.validate();
  require(occupancy.size() == mdp.n_states(), "occupancy length does not match n_states");
  const double eps = config.ppo_epsilon;

  Eigen::MatrixXd next = pi_k.probs();
  for (Index s = 0; s < mdp.n_states(); ++s) {
    const Eigen::VectorXd base = pi_k.probs().row(s).transpose();
    const Eigen::Array<bool, Eigen::Dynamic, 1> support = base.array() > 0.0;
    Eigen::VectorXd theta = base;
    for (std::size_t it = 0; it < config.ppo_inner_iters; ++it) {
      // d/dtheta_a of d(s) pi_k(a) cpi(theta_a / pi_k(a), A) is d(s) A when the
      // unclipped branch attains the max and 0 when the clipped one does.
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
      for (Index a = 0; a < theta.size(); ++a) {
        if (!support(a)) continue;
        const double adv = advantage_fn(s, a);
        const double ratio = theta(a) / base(a);
        const bool unclipped = adv >= 0.0 ? ratio >= 1.0 - eps : ratio <= 1.0 + eps;
        if (unclipped) grad(a) = occupancy(s) * adv;
      }
      if ((grad.array() == 0.0).all()) break;
      theta = project_to_simplex(theta - config.ppo_lr * grad, support);
    }
    next.row(s) = theta.transpose();
  }
  return PolicyMatrix(std::move(next));
}

PolicyMatrix ppo_update(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& advantage_fn,
                        const SolverConfig& config) {
  return ppo_update(mdp, pi_k, advantage_fn, config, adjoint_occupancy(mdp, pi_k));
}

PolicyMatrix mirror_descent_update(const FiniteMdp& mdp, const PolicyMatrix& pi_k, const QFn& q_fn,
                                   double eta) {
  check_update_shapes(mdp, pi_k, q_fn);
  require(eta >= 0.0, "mirror descent step must be non-negative");
  require(pi_k.strictly_positive(), "mirror descent needs a strictly positive policy");
  if (eta == 0.0) return pi_k;

  Eigen::MatrixXd next(mdp.n_states(), mdp.n_actions());
  for (Index s = 0; s < mdp.n_states(); ++s) {
    const double shift = q_fn.row(s).minCoeff();
    Eigen::RowVectorXd row =
        pi_k.probs().row(s).array() * (-eta * (q_fn.row(s).array() - shift)).exp();
    next.row(s) = row / row.sum();
  }
  return PolicyMatrix(std::move(next));
}

RowSolve otpg_row(const Eigen::Ref<const Eigen::VectorXd>& adv_row,
                  const Eigen::Ref<const Eigen::VectorXd>& pi_row, double beta,
                  const KernelMetric& metric, double tol, std::size_t max_steps) {
  require(adv_row.size() == metric.n_actions() && pi_row.size() == metric.n_actions(),
          "row length does not match n_actions");
  require(beta >= 0.0, "beta must be non-negative");
  if (is_constant(adv_row)) return RowSolve{pi_row, 0.0, 0.0, 0, true};
  if (beta == 0.0) return RowSolve{vertex(adv_row.size(), lowest_argmin(adv_row)), 0.0, 0.0, 0, true};

  const Eigen::MatrixXd& r = metric.r_matrix();
  const double step = 1.0 / (beta * metric.r_max_eigenvalue());
  Eigen::VectorXd p = pi_row;
  RowSolve out{p, std::numeric_limits<double>::infinity(), 0.0, 0, false};
  for (std::size_t it = 0; it < max_steps; ++it) {
    const Eigen::VectorXd grad = adv_row + beta * (r * (p - pi_row));
    Eigen::VectorXd next = project_to_simplex(p - step * grad);
    out.residual = (next - p).lpNorm<Eigen::Infinity>() / step;
    out.iterations = it + 1;
    p = std::move(next);
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
  }
  out.p = std::move(p);
  return out;
}

RowSolve trpo_row(const Eigen::Ref<const Eigen::VectorXd>& adv_row,
                  const Eigen::Ref<const Eigen::VectorXd>& pi_row, double radius_sq,
                  const KernelMetric& metric) {
  require(radius_sq > 0.0, "trust-region radius must be positive");
  require(adv_row.size() == metric.n_actions() && pi_row.size() == metric.n_actions(),
          "row length does not match n_actions");
  if (is_constant(adv_row)) return RowSolve{pi_row, 0.0, 0.0, 0, true};

  const Eigen::VectorXd greedy = vertex(adv_row.size(), lowest_argmin(adv_row));
  if (mmd_squared(metric, pi_row, greedy) <= radius_sq) {
    return RowSolve{greedy, 0.0, 0.0, 0, true};
  }

  // The penalized minimizer p(lambda) moves monotonically toward pi as lambda
  // grows, so MMD(pi, p(lambda))^2 - radius^2 has a single sign change.
  auto solve_at = [&](double lambda) { return otpg_row(adv_row, pi_row, lambda, metric, 1e-12); };
  auto gap = [&](const RowSolve& sol) { return mmd_squared(metric, pi_row, sol.p) - radius_sq; };

  double hi = 1.0;
  RowSolve at_hi = solve_at(hi);
  while (gap(at_hi) > 0.0) {
    hi *= 2.0;
    require(hi < 1e300, "trust-region multiplier search diverged");
    at_hi = solve_at(hi);
  }
  double lo = hi / 2.0;
  while (gap(solve_at(lo)) <= 0.0) {
    lo /= 2.0;
    if (lo < 1e-300) break;
  }
  std::size_t steps = 0;
  while (hi / lo - 1.0 > 1e-15 && steps < 400) {
    const double mid = std::sqrt(lo * hi);
    RowSolve at_mid = solve_at(mid);
    if (gap(at_mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = std::move(at_mid);
    }
    ++steps;
  }

  // KKT residual: stationarity of A + lambda R (p - pi) on the simplex,
  // complementarity, and primal feasibility.
  const Eigen::VectorXd& p = at_hi.p;
  const Eigen::VectorXd g = adv_row + hi * (metric.r_matrix() * (p - pi_row));
  double mu = 0.0;
  int support = 0;
  for (Index a = 0; a < p.size(); ++a) {
    if (p(a) > 1e-12) {
      mu += g(a);
      ++support;
    }
  }
  mu /= double(support);
  double stationarity = 0.0;
  for (Index a = 0; a < p.size(); ++a) {
    stationarity = std::max(stationarity, p(a) > 1e-12 ? std::abs(g(a) - mu) : std::max(0.0, mu - g(a)));
  }
  const double slack = gap(at_hi);
  const double kkt = std::max({stationarity, std::abs(hi * slack), std::max(0.0, slack)});
  return RowSolve{p, kkt, hi, steps, kkt <= 1e-6};
}

PolicyUpdate otpg_update(const FiniteMdp& mdp, const KernelMetric& metric, const PolicyMatrix& pi_k,
                         const QFn& advantage_fn, const Eigen::VectorXd& beta_k) {
  check_update_shapes(mdp, pi_k, advantage_fn);
  require(beta_k.size() == mdp.n_states(), "beta_k must have one entry per state");
  require(metric.n_actions() == mdp.n_actions() && metric.n_states() == mdp.n_states(),
          "metric shape does not match the MDP");
  Eigen::MatrixXd next(mdp.n_states(), mdp.n_actions());
  PolicyUpdate out{pi_k, 0.0, true};
  for (Index s = 0; s < mdp.n_states(); ++s) {
    RowSolve row = otpg_row(advantage_fn.row(s).transpose(), pi_k.probs().row(s).transpose(),
                            beta_k(s) * metric.weight_s()(s), metric);
    next.row(s) = row.p.transpose();
    out.max_residual = std::max(out.max_residual, row.residual);
    out.converged = out.converged && row.converged;
  }
  out.policy = PolicyMatrix(std::move(next));
  return out;
}

PolicyUpdate otpg_update(const FiniteMdp& mdp, const KernelMetric& metric, const PolicyMatrix& pi_k,
                         const QFn& advantage_fn, double beta_k) {
  return otpg_update(mdp, metric, pi_k, advantage_fn,
                     Eigen::VectorXd::Constant(mdp.n_states(), beta_k));
}

PolicyUpdate trpo_constrained_update(const FiniteMdp& mdp, const KernelMetric& metric,
                                     const PolicyMatrix& pi_k, const QFn& advantage_fn,
                                     double radius) {
  check_update_shapes(mdp, pi_k, advantage_fn);
  require(radius > 0.0, "trust-region radius must be positive");
  require(metric.n_actions() == mdp.n_actions() && metric.n_states() == mdp.n_states(),
          "metric shape does not match the MDP");
  Eigen::MatrixXd next(mdp.n_states(), mdp.n_actions());
  PolicyUpdate out{pi_k, 0.0, true};
  for (Index s = 0; s < mdp.n_states(); ++s) {
    const double w = metric.weight_s()(s);
    RowSolve row = trpo_row(advantage_fn.row(s).transpose(), pi_k.probs().row(s).transpose(),
                            radius * radius * w * w, metric);
    next.row(s) = row.p.transpose();
    out.max_residual = std::max(out.max_residual, row.residual);
    out.converged = out.converged && row.converged;
  }
  out.policy = PolicyMatrix(std::move(next));
  return out;
}

SolveResult ppo_solve(const FiniteMdp& mdp, const SolverConfig& config, AdvantageSource& source) {
  config.validate();
  return detail::run_policy_loop(
      mdp, config, source, uniform_like(mdp),
      [&](std::size_t, const PolicyMatrix& pi, const AdvantageEstimate& est) {
        return detail::StepOutcome{ppo_update(mdp, pi, est.advantage, config, est.occupancy), 0.0, 0.0};
      });
}

SolveResult mirror_descent_solve(const FiniteMdp& mdp, const SolverConfig& config,
                                 AdvantageSource& source) {
  config.validate();
  return detail::run_policy_loop(
      mdp, config, source, uniform_like(mdp),
      [&](std::size_t k, const PolicyMatrix& pi, const AdvantageEstimate& est) {
        // A and q differ by a per-state constant, which the update ignores.
        const double eta = config.eta0 * double(k + 1);
        Eigen::MatrixXd next = mirror_descent_update(mdp, pi, est.advantage, eta).probs();
        // exp() underflows to exact zeros after enough steps; the next KL step needs support.
        constexpr double kFloor = std::numeric_limits<double>::min();
        if (next.minCoeff() < kFloor) {
          next = next.cwiseMax(kFloor);
          for (Index s = 0; s < next.rows(); ++s) next.row(s) /= next.row(s).sum();
        }
        return detail::StepOutcome{PolicyMatrix(std::move(next)), 0.0, 0.0};
      });
}

SolveResult otpg_solve(const FiniteMdp& mdp, const KernelMetric& metric, const SolverConfig& config,
                       AdvantageSource& source) {
  config.validate();
  return detail::run_policy_loop(
      mdp, config, source, uniform_like(mdp),
      [&](std::size_t k, const PolicyMatrix& pi, const AdvantageEstimate& est) {
        const Eigen::VectorXd beta = heuristic_beta(est.advantage, k);
        PolicyUpdate update = otpg_update(mdp, metric, pi, est.advantage, beta);
        return detail::StepOutcome{std::move(update.policy), beta.mean(), update.max_residual};
      });
}

SolveResult trpo_solve(const FiniteMdp& mdp, const KernelMetric& metric, const SolverConfig& config,
                       AdvantageSource& source) {
  config.validate();
  return detail::run_policy_loop(
      mdp, config, source, uniform_like(mdp),
      [&](std::size_t k, const PolicyMatrix& pi, const AdvantageEstimate& est) {
        const double radius = config.trpo_radius0 / std::sqrt(double(k + 1));
        PolicyUpdate update = trpo_constrained_update(mdp, metric, pi, est.advantage, radius);
        return detail::StepOutcome{std::move(update.policy), radius, update.max_residual};
      });
}

}  // namespace opmdp
