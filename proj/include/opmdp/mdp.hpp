#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

namespace opmdp {

using Index = Eigen::Index;

/// Real function on states: v_pi, v*, shaping potentials.
using ValueFn = Eigen::VectorXd;
/// Real function on state-action pairs, n_states x n_actions: q_pi, A_pi, costs.
using QFn = Eigen::MatrixXd;

/// Tolerance used when validating probability vectors on construction.
inline constexpr double kProbabilityTolerance = 1e-12;

/**
 * Finite discounted-cost MDP (S, A, P, c, rho, gamma).
 *
 * The transition kernel is stored densely as an (n_states * n_actions) x n_states
 * matrix whose row `s * n_actions + a` is P(. | s, a). With that layout the
 * operator P: F_S -> F_K is a single matrix-vector product. The kernel is held
 * behind a shared pointer so copies (e.g. a cost-shaped MDP) share it.
 *
 * Instances are immutable after construction.
 */
class FiniteMdp {
 public:
  FiniteMdp(Eigen::MatrixXd cost, Eigen::MatrixXd transition, double gamma, Eigen::VectorXd rho);

  Index n_states() const { return cost_.rows(); }
  Index n_actions() const { return cost_.cols(); }
  double gamma() const { return gamma_; }

  const Eigen::MatrixXd& cost() const { return cost_; }
  const Eigen::VectorXd& rho() const { return rho_; }
  const Eigen::MatrixXd& transition() const { return *transition_; }

  /// Rows P(. | s, a) for all a, as an n_actions x n_states block.
  auto transition_block(Index s) const {
    return transition_->middleRows(s * n_actions(), n_actions());
  }
  double transition_prob(Index s, Index a, Index next) const {
    return (*transition_)(s * n_actions() + a, next);
  }

  /// Same dynamics, discount and initial distribution with a different cost.
  FiniteMdp with_cost(Eigen::MatrixXd cost) const;

 private:
  FiniteMdp(Eigen::MatrixXd cost, std::shared_ptr<const Eigen::MatrixXd> transition, double gamma,
            Eigen::VectorXd rho);
  void validate() const;

  Eigen::MatrixXd cost_;
  std::shared_ptr<const Eigen::MatrixXd> transition_;
  double gamma_;
  Eigen::VectorXd rho_;
};

/// Row-stochastic n_states x n_actions matrix pi(a | s).
class PolicyMatrix {
 public:
  explicit PolicyMatrix(Eigen::MatrixXd probs);

  static PolicyMatrix uniform(Index n_states, Index n_actions);
  static PolicyMatrix deterministic(const std::vector<Index>& actions, Index n_actions);

  Index n_states() const { return probs_.rows(); }
  Index n_actions() const { return probs_.cols(); }
  const Eigen::MatrixXd& probs() const { return probs_; }
  double operator()(Index s, Index a) const { return probs_(s, a); }

  bool is_deterministic() const;
  bool strictly_positive() const { return (probs_.array() > 0.0).all(); }

  /// pi + epsilon (other - pi); a valid policy for epsilon in [0, 1].
  PolicyMatrix mix(const PolicyMatrix& other, double epsilon) const;

  friend bool operator==(const PolicyMatrix& lhs, const PolicyMatrix& rhs) {
    return lhs.probs_.rows() == rhs.probs_.rows() && lhs.probs_.cols() == rhs.probs_.cols() &&
           lhs.probs_ == rhs.probs_;
  }

 private:
  Eigen::MatrixXd probs_;
};

/// [P v](s, a) = sum_{s'} P(s' | s, a) v(s').
QFn apply_P(const FiniteMdp& mdp, const ValueFn& v);

/// [pi q](s) = sum_a pi(a | s) q(s, a).
ValueFn apply_policy(const PolicyMatrix& pi, const QFn& q);

/// P_pi = pi P as an n_states x n_states row-stochastic matrix.
Eigen::MatrixXd transition_under_policy(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// c_pi = pi c.
ValueFn policy_cost(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// sigma_pi = (I - gamma P_pi)^{-1} by dense LU.
Eigen::MatrixXd occupancy_resolvent(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// rho^T (I - gamma P_pi)^{-1}: unnormalized discounted state-visitation weights.
Eigen::VectorXd adjoint_occupancy(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                  const Eigen::VectorXd& rho);
Eigen::VectorXd adjoint_occupancy(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// v_pi, the unique fixed point of T_pi.
ValueFn evaluate_policy(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// J_pi(rho) = <v_pi, rho>.
double objective(const FiniteMdp& mdp, const PolicyMatrix& pi);

/// q = c + gamma P v.
QFn q_from_value(const FiniteMdp& mdp, const ValueFn& v);
QFn q_function(const FiniteMdp& mdp, const PolicyMatrix& pi);
/// A_pi = q_pi - v_pi; pi A_pi = 0.
QFn advantage(const FiniteMdp& mdp, const PolicyMatrix& pi);

struct GreedyBackup {
  ValueFn value;               ///< [T v](s) = min_a c(s,a) + gamma [P v](s,a)
  std::vector<Index> actions;  ///< lowest-index minimizer per state
  PolicyMatrix policy;         ///< one-hot rows of `actions`
};

/// Optimality Bellman operator with a deterministic greedy selector.
GreedyBackup bellman_optimal(const FiniteMdp& mdp, const ValueFn& v);

/// Lowest-index argmin of each row.
std::vector<Index> greedy_actions(const QFn& q);

struct ShapedMdp {
  FiniteMdp mdp;
  /// Constant added to every shaped cost to restore non-negativity.
  double shift;
};

/// Potential-based shaping c + gamma P phi - phi, then shifted to be non-negative.
ShapedMdp shape_cost(const FiniteMdp& mdp, const ValueFn& phi);

/// Power-iteration estimate of the spectral radius of a square matrix, using the
/// sup-norm growth ratio from a seeded positive start vector.
double spectral_radius_estimate(const Eigen::MatrixXd& matrix, int iterations = 500,
                                std::uint64_t seed = 0);

}  // namespace opmdp
