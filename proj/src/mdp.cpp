#include "opmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "opmdp/errors.hpp"

namespace opmdp {

namespace {

bool is_probability_vector(const Eigen::Ref<const Eigen::VectorXd>& p) {
  return (p.array() >= 0.0).all() && std::abs(p.sum() - 1.0) <= kProbabilityTolerance;
}

Eigen::MatrixXd identity_minus_discounted(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  const Index n = mdp.n_states();
  return Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * transition_under_policy(mdp, pi);
}

void check_policy_shape(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
          "policy shape does not match the MDP");
}

}  // namespace

FiniteMdp::FiniteMdp(Eigen::MatrixXd cost, Eigen::MatrixXd transition, double gamma,
                     Eigen::VectorXd rho)
    : FiniteMdp(std::move(cost), std::make_shared<const Eigen::MatrixXd>(std::move(transition)),
                gamma, std::move(rho)) {}

FiniteMdp::FiniteMdp(Eigen::MatrixXd cost, std::shared_ptr<const Eigen::MatrixXd> transition,
                     double gamma, Eigen::VectorXd rho)
    : cost_(std::move(cost)), transition_(std::move(transition)), gamma_(gamma), rho_(std::move(rho)) {
  validate();
}

void FiniteMdp::validate() const {
  const Index n = cost_.rows();
  const Index m = cost_.cols();
  require(n > 0 && m > 0, "MDP needs at least one state and one action");
  require(transition_->rows() == n * m && transition_->cols() == n,
          "transition must be (n_states*n_actions) x n_states");
  require(rho_.size() == n, "rho must have n_states entries");
  require(gamma_ >= 0.0 && gamma_ < 1.0, "gamma must lie in [0, 1)");
  require(cost_.allFinite(), "cost must be finite");
  require((cost_.array() >= 0.0).all(), "cost must be non-negative");
  require(is_probability_vector(rho_), "rho must be a probability vector");
  for (Index row = 0; row < n * m; ++row) {
    if (!is_probability_vector(transition_->row(row).transpose())) {
      throw ContractViolation("transition row " + std::to_string(row) +
                              " is not a probability vector");
    }
  }
}

FiniteMdp FiniteMdp::with_cost(Eigen::MatrixXd cost) const {
  return FiniteMdp(std::move(cost), transition_, gamma_, rho_);
}

PolicyMatrix::PolicyMatrix(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  require(probs_.rows() > 0 && probs_.cols() > 0, "policy must be non-empty");
  for (Index s = 0; s < probs_.rows(); ++s) {
    if (!is_probability_vector(probs_.row(s).transpose())) {
      throw ContractViolation("policy row " + std::to_string(s) + " is not a probability vector");
    }
  }
}

PolicyMatrix PolicyMatrix::uniform(Index n_states, Index n_actions) {
  return PolicyMatrix(Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / double(n_actions)));
}

PolicyMatrix PolicyMatrix::deterministic(const std::vector<Index>& actions, Index n_actions) {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(Index(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    require(actions[s] >= 0 && actions[s] < n_actions, "action index out of range");
    probs(Index(s), actions[s]) = 1.0;
  }
  return PolicyMatrix(std::move(probs));
}

bool PolicyMatrix::is_deterministic() const {
  return ((probs_.array() == 1.0).rowwise().count() == 1).all();
}

PolicyMatrix PolicyMatrix::mix(const PolicyMatrix& other, double epsilon) const {
  require(other.probs_.rows() == probs_.rows() && other.probs_.cols() == probs_.cols(),
          "policy shapes differ");
  require(epsilon >= 0.0 && epsilon <= 1.0, "mixture weight must lie in [0, 1]");
  Eigen::MatrixXd mixed = probs_ + epsilon * (other.probs_ - probs_);
  mixed = mixed.cwiseMax(0.0);
  for (Index s = 0; s < mixed.rows(); ++s) mixed.row(s) /= mixed.row(s).sum();
  return PolicyMatrix(std::move(mixed));
}

QFn apply_P(const FiniteMdp& mdp, const ValueFn& v) {
  require(v.size() == mdp.n_states(), "value function length does not match n_states");
  const Eigen::VectorXd flat = mdp.transition() * v;
  // Row s*A + a of the flat product is (s, a).
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), mdp.n_states(), mdp.n_actions());
}

ValueFn apply_policy(const PolicyMatrix& pi, const QFn& q) {
  require(q.rows() == pi.n_states() && q.cols() == pi.n_actions(),
          "Q function shape does not match the policy");
  return pi.probs().cwiseProduct(q).rowwise().sum();
}

Eigen::MatrixXd transition_under_policy(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  check_policy_shape(mdp, pi);
  Eigen::MatrixXd p_pi(mdp.n_states(), mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s) {
    p_pi.row(s).noalias() = pi.probs().row(s) * mdp.transition_block(s);
  }
  return p_pi;
}

ValueFn policy_cost(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  return apply_policy(pi, mdp.cost());
}

Eigen::MatrixXd occupancy_resolvent(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  const Index n = mdp.n_states();
  Eigen::MatrixXd sigma =
      identity_minus_discounted(mdp, pi).partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  if (!sigma.allFinite()) throw NumericalError("occupancy resolvent solve produced non-finite values");
  return sigma;
}

Eigen::VectorXd adjoint_occupancy(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                  const Eigen::VectorXd& rho) {
  require(rho.size() == mdp.n_states(), "rho length does not match n_states");
  Eigen::VectorXd d = identity_minus_discounted(mdp, pi).transpose().partialPivLu().solve(rho);
  if (!d.allFinite()) throw NumericalError("adjoint occupancy solve produced non-finite values");
  return d;
}

Eigen::VectorXd adjoint_occupancy(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  return adjoint_occupancy(mdp, pi, mdp.rho());
}

ValueFn evaluate_policy(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  ValueFn v = identity_minus_discounted(mdp, pi).partialPivLu().solve(policy_cost(mdp, pi));
  if (!v.allFinite()) throw NumericalError("policy evaluation produced non-finite values");
  return v;
}

double objective(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  return evaluate_policy(mdp, pi).dot(mdp.rho());
}

QFn q_from_value(const FiniteMdp& mdp, const ValueFn& v) {
  return mdp.cost() + mdp.gamma() * apply_P(mdp, v);
}

QFn q_function(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  return q_from_value(mdp, evaluate_policy(mdp, pi));
}

QFn advantage(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  const ValueFn v = evaluate_policy(mdp, pi);
  QFn a = q_from_value(mdp, v);
  a.colwise() -= v;
  return a;
}

std::vector<Index> greedy_actions(const QFn& q) {
  std::vector<Index> actions(std::size_t(q.rows()));
  for (Index s = 0; s < q.rows(); ++s) {
    Index best = 0;
    for (Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) < q(s, best)) best = a;
    }
    actions[std::size_t(s)] = best;
  }
  return actions;
}

GreedyBackup bellman_optimal(const FiniteMdp& mdp, const ValueFn& v) {
  const QFn q = q_from_value(mdp, v);
  std::vector<Index> actions = greedy_actions(q);
  ValueFn tv(mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s) tv(s) = q(s, actions[std::size_t(s)]);
  PolicyMatrix policy = PolicyMatrix::deterministic(actions, mdp.n_actions());
  return GreedyBackup{std::move(tv), std::move(actions), std::move(policy)};
}

ShapedMdp shape_cost(const FiniteMdp& mdp, const ValueFn& phi) {
  require(phi.size() == mdp.n_states(), "potential length does not match n_states");
  require(phi.allFinite(), "potential must be finite");
  Eigen::MatrixXd shaped = mdp.cost() + mdp.gamma() * apply_P(mdp, phi);
  shaped.colwise() -= phi;
  const double shift = std::max(0.0, -shaped.minCoeff());
  shaped.array() += shift;
  // Rounding can leave entries at -1e-17 after the shift.
  shaped = shaped.cwiseMax(0.0);
  return ShapedMdp{mdp.with_cost(std::move(shaped)), shift};
}

double spectral_radius_estimate(const Eigen::MatrixXd& matrix, int iterations, std::uint64_t seed) {
  require(matrix.rows() == matrix.cols(), "spectral radius needs a square matrix");
  require(iterations >= 1, "power iteration needs at least one step");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.5, 1.0);
  Eigen::VectorXd x(matrix.rows());
  for (Index i = 0; i < x.size(); ++i) x(i) = unit(rng);
  x /= x.lpNorm<Eigen::Infinity>();

  double ratio = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Eigen::VectorXd y = matrix * x;
    const double norm = y.lpNorm<Eigen::Infinity>();
    ratio = norm;  // ||x||_inf == 1
    if (norm == 0.0) return 0.0;
    x = y / norm;
  }
  return ratio;
}

}  // namespace opmdp
