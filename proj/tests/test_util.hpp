#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "opmdp/garnet.hpp"
#include "opmdp/mdp.hpp"

namespace opmdp::testing {

/// Builds an MDP from nested [s][a][s'] transition lists.
inline FiniteMdp make_mdp(const Eigen::MatrixXd& cost,
                          const std::vector<std::vector<std::vector<double>>>& p, double gamma,
                          Eigen::VectorXd rho = Eigen::VectorXd()) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  Eigen::MatrixXd flat(n * m, n);
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      for (Index t = 0; t < n; ++t) flat(s * m + a, t) = p[std::size_t(s)][std::size_t(a)][std::size_t(t)];
    }
  }
  if (rho.size() == 0) rho = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  return FiniteMdp(cost, flat, gamma, rho);
}

inline FiniteMdp seeded_mdp(Index n, Index m, std::uint64_t seed, double gamma = 0.9,
                            Index branching = 0) {
  GarnetSpec spec;
  spec.n_states = n;
  spec.n_actions = m;
  spec.branching = branching > 0 ? branching : std::min<Index>(n, 3);
  spec.gamma = gamma;
  spec.seed = seed;
  return generate_garnet(spec);
}

inline PolicyMatrix seeded_policy(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Eigen::MatrixXd probs(n, m);
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) probs(s, a) = unit(rng);
    probs.row(s) /= probs.row(s).sum();
  }
  return PolicyMatrix(probs);
}

inline double sup_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace opmdp::testing
