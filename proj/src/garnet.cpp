#include "opmdp/garnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "opmdp/errors.hpp"

namespace opmdp {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void GarnetSpec::validate() const {
  require(n_states >= 1 && n_actions >= 1, "GARNET needs at least one state and one action");
  require(branching >= 1 && branching <= n_states, "branching must lie in [1, n_states]");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require(cost_low >= 0.0 && cost_high >= cost_low, "cost range must be non-negative and ordered");
}

FiniteMdp generate_garnet(const GarnetSpec& spec) {
  spec.validate();
  const Index n = spec.n_states;
  const Index m = spec.n_actions;
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> cost_draw(spec.cost_low, spec.cost_high);

  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(n * m, n);
  Eigen::MatrixXd cost(n, m);
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  std::vector<double> cuts(static_cast<std::size_t>(spec.branching - 1));

  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      // Partial Fisher-Yates: the first `branching` slots become the successors.
      for (Index i = 0; i < spec.branching; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(pool[std::size_t(i)], pool[std::size_t(pick(rng))]);
      }
      for (double& c : cuts) c = unit(rng);
      std::sort(cuts.begin(), cuts.end());
      double previous = 0.0;
      for (Index i = 0; i < spec.branching; ++i) {
        const double upper = i + 1 < spec.branching ? cuts[std::size_t(i)] : 1.0;
        transition(s * m + a, pool[std::size_t(i)]) = upper - previous;
        previous = upper;
      }
      cost(s, a) = cost_draw(rng);
    }
  }
  return FiniteMdp(std::move(cost), std::move(transition), spec.gamma,
                   Eigen::VectorXd::Constant(n, 1.0 / double(n)));
}

MdpSampler::Table MdpSampler::make_table(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  Table table;
  double total = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    total += probs(i);
    table.outcomes.push_back(i);
    table.cumulative.push_back(total);
  }
  require(!table.outcomes.empty(), "cannot sample from an all-zero distribution");
  return table;
}

Index MdpSampler::draw(const Table& table, Rng& rng) {
  if (table.outcomes.size() == 1) return table.outcomes.front();
  std::uniform_real_distribution<double> unit(0.0, table.cumulative.back());
  const double u = unit(rng);
  auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), u);
  if (it == table.cumulative.end()) --it;
  return table.outcomes[std::size_t(it - table.cumulative.begin())];
}

MdpSampler::MdpSampler(const FiniteMdp& mdp, const PolicyMatrix& pi)
    : n_actions_(mdp.n_actions()), initial_(make_table(mdp.rho())) {
  require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
          "policy shape does not match the MDP");
  policy_.reserve(std::size_t(mdp.n_states()));
  for (Index s = 0; s < mdp.n_states(); ++s) policy_.push_back(make_table(pi.probs().row(s).transpose()));
  transition_.reserve(std::size_t(mdp.n_states() * mdp.n_actions()));
  for (Index row = 0; row < mdp.transition().rows(); ++row) {
    transition_.push_back(make_table(mdp.transition().row(row).transpose()));
  }
}

namespace {

Trajectory simulate_with(const FiniteMdp& mdp, const MdpSampler& sampler, std::size_t horizon, Rng& rng) {
  Trajectory traj;
  traj.states.reserve(horizon);
  traj.actions.reserve(horizon);
  traj.costs.reserve(horizon);
  Index s = sampler.initial_state(rng);
  for (std::size_t t = 0; t < horizon; ++t) {
    const Index a = sampler.action(s, rng);
    traj.states.push_back(s);
    traj.actions.push_back(a);
    traj.costs.push_back(mdp.cost()(s, a));
    s = sampler.next_state(s, a, rng);
  }
  return traj;
}

}  // namespace

Trajectory simulate(const FiniteMdp& mdp, const PolicyMatrix& pi, std::size_t horizon, Rng& rng) {
  require(horizon >= 1, "horizon must be at least 1");
  return simulate_with(mdp, MdpSampler(mdp, pi), horizon, rng);
}

MonteCarloEstimate estimate_advantage_mc(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                         std::size_t episodes, std::size_t steps_per_episode,
                                         Rng& rng) {
  require(episodes >= 1, "need at least one episode");
  require(steps_per_episode >= 1, "need at least one step per episode");
  const Index n = mdp.n_states();
  const Index m = mdp.n_actions();
  const double gamma = mdp.gamma();

  Eigen::MatrixXd return_sum = Eigen::MatrixXd::Zero(n, m);
  MonteCarloEstimate est;
  est.visits = decltype(est.visits)::Zero(n, m);
  std::vector<double> returns(steps_per_episode);
  const MdpSampler sampler(mdp, pi);

  for (std::size_t e = 0; e < episodes; ++e) {
    const Trajectory traj = simulate_with(mdp, sampler, steps_per_episode, rng);
    double g = 0.0;
    for (std::size_t t = traj.size(); t-- > 0;) {
      g = traj.costs[t] + gamma * g;
      returns[t] = g;
    }
    for (std::size_t t = 0; t < traj.size(); ++t) {
      return_sum(traj.states[t], traj.actions[t]) += returns[t];
      est.visits(traj.states[t], traj.actions[t]) += 1;
    }
  }

  est.q_hat = QFn::Zero(n, m);
  est.advantage = QFn::Zero(n, m);
  est.occupancy = Eigen::VectorXd::Zero(n);
  est.samples = std::uint64_t(episodes) * steps_per_episode;
  for (Index s = 0; s < n; ++s) {
    double weight = 0.0;
    double baseline = 0.0;
    std::uint64_t state_visits = 0;
    for (Index a = 0; a < m; ++a) {
      const auto count = est.visits(s, a);
      if (count == 0) continue;
      est.q_hat(s, a) = return_sum(s, a) / double(count);
      weight += pi(s, a);
      baseline += pi(s, a) * est.q_hat(s, a);
      state_visits += count;
    }
    est.occupancy(s) = double(state_visits) / double(est.samples) / (1.0 - gamma);
    if (weight <= 0.0) continue;
    baseline /= weight;
    for (Index a = 0; a < m; ++a) {
      if (est.visits(s, a) > 0) est.advantage(s, a) = est.q_hat(s, a) - baseline;
    }
  }
  return est;
}

MonteCarloAdvantage::MonteCarloAdvantage(std::size_t episodes, std::size_t steps_per_episode,
                                         std::uint64_t seed)
    : episodes_(episodes), steps_(steps_per_episode), rng_(seed) {
  require(episodes_ >= 1 && steps_ >= 1, "Monte Carlo source needs episodes and steps");
}

AdvantageEstimate MonteCarloAdvantage::estimate(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  MonteCarloEstimate est = estimate_advantage_mc(mdp, pi, episodes_, steps_, rng_);
  return AdvantageEstimate{std::move(est.advantage), std::move(est.occupancy), est.samples};
}

GeometricEstimate geometric_horizon_estimate(const FiniteMdp& mdp, const PolicyMatrix& pi_k,
                                             const QFn& q, const PolicyMatrix& pi_prime,
                                             std::size_t n_rollouts, Rng& rng) {
  require(n_rollouts >= 1, "need at least one rollout");
  const ValueFn f = apply_policy(pi_prime, q);
  require(f.size() == mdp.n_states(), "pi' q length does not match n_states");
  const MdpSampler sampler(mdp, pi_k);
  std::bernoulli_distribution keep_going(mdp.gamma());

  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < n_rollouts; ++r) {
    Index s = sampler.initial_state(rng);
    double partial = f(s);
    // Continuing with probability gamma gives P(N = n) = (1 - gamma) gamma^n.
    while (keep_going(rng)) {
      s = sampler.next_state(s, sampler.action(s, rng), rng);
      partial += f(s);
    }
    const double delta = partial - mean;
    mean += delta / double(r + 1);
    m2 += delta * (partial - mean);
  }
  const double variance = n_rollouts > 1 ? m2 / double(n_rollouts - 1) : 0.0;
  return GeometricEstimate{mean, std::sqrt(variance / double(n_rollouts)), n_rollouts};
}

}  // namespace opmdp
