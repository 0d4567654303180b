#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "opmdp/mdp.hpp"
#include "opmdp/solvers.hpp"

namespace opmdp {

using Rng = std::mt19937_64;

/// Independent stream seed number `index` derived from `master` (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Random GARNET MDP family. Defaults follow the 1000-state benchmark.
struct GarnetSpec {
  Index n_states = 1000;
  Index n_actions = 200;
  Index branching = 20;
  double gamma = 0.95;
  double cost_low = 0.0;
  double cost_high = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/**
 * For every (s, a): `branching` distinct successors drawn without replacement,
 * probabilities from the gaps of sorted uniforms (a flat Dirichlet), cost
 * uniform in [cost_low, cost_high). rho is uniform over states.
 */
FiniteMdp generate_garnet(const GarnetSpec& spec);

struct Trajectory {
  std::vector<Index> states;
  std::vector<Index> actions;
  std::vector<double> costs;

  std::size_t size() const { return states.size(); }
};

/// Alias-free sparse sampler over the nonzero entries of rho, pi and P.
class MdpSampler {
 public:
  MdpSampler(const FiniteMdp& mdp, const PolicyMatrix& pi);

  Index initial_state(Rng& rng) const { return draw(initial_, rng); }
  Index action(Index s, Rng& rng) const { return draw(policy_[std::size_t(s)], rng); }
  Index next_state(Index s, Index a, Rng& rng) const {
    return draw(transition_[std::size_t(s * n_actions_ + a)], rng);
  }

 private:
  struct Table {
    std::vector<Index> outcomes;
    std::vector<double> cumulative;
  };
  static Table make_table(const Eigen::Ref<const Eigen::VectorXd>& probs);
  static Index draw(const Table& table, Rng& rng);

  Index n_actions_;
  Table initial_;
  std::vector<Table> policy_;
  std::vector<Table> transition_;
};

/// s_0 ~ rho, a_t ~ pi(. | s_t), s_{t+1} ~ P(. | s_t, a_t).
Trajectory simulate(const FiniteMdp& mdp, const PolicyMatrix& pi, std::size_t horizon, Rng& rng);

struct MonteCarloEstimate {
  QFn q_hat;
  QFn advantage;
  /// Visits per (s, a); pairs with zero visits have advantage 0.
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> visits;
  /// (1 / (1 - gamma)) * empirical state frequencies.
  Eigen::VectorXd occupancy;
  std::uint64_t samples = 0;
};

/**
 * Every-visit Monte Carlo: discounted returns truncated at the episode end are
 * averaged per visited (s, a). The baseline v_hat(s) averages q_hat over the
 * visited actions weighted by pi and renormalized, so sum_a pi(a|s) A_hat(s,a)
 * is zero at every visited state.
 */
MonteCarloEstimate estimate_advantage_mc(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                         std::size_t episodes, std::size_t steps_per_episode,
                                         Rng& rng);

/// AdvantageSource backed by estimate_advantage_mc with an owned RNG stream.
class MonteCarloAdvantage final : public AdvantageSource {
 public:
  MonteCarloAdvantage(std::size_t episodes, std::size_t steps_per_episode, std::uint64_t seed);
  AdvantageEstimate estimate(const FiniteMdp& mdp, const PolicyMatrix& pi) override;
  bool sample_based() const override { return true; }

 private:
  std::size_t episodes_;
  std::size_t steps_;
  Rng rng_;
};

struct GeometricEstimate {
  double mean;
  double standard_error;
  std::size_t rollouts;
};

/**
 * Estimates <pi' q, sigma*_{pi_k} rho> by averaging partial sums
 * sum_{i <= N} [pi' q](s_i) over rollouts with N ~ Geometric, P(N = n) =
 * (1 - gamma) gamma^n, s_0 ~ rho and s_{i+1} ~ P_{pi_k}(. | s_i).
 */
GeometricEstimate geometric_horizon_estimate(const FiniteMdp& mdp, const PolicyMatrix& pi_k,
                                             const QFn& q, const PolicyMatrix& pi_prime,
                                             std::size_t n_rollouts, Rng& rng);

}  // namespace opmdp
