#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "opmdp/errors.hpp"
#include "opmdp/mdp.hpp"
#include "opmdp/mdp_io.hpp"
#include "opmdp/solvers.hpp"
#include "test_util.hpp"

using namespace opmdp;
using opmdp::testing::make_mdp;
using opmdp::testing::seeded_mdp;
using opmdp::testing::seeded_policy;
using opmdp::testing::sup_diff;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// 0 -> 1 -> 1, one action.
FiniteMdp chain(double gamma, VectorXd rho = VectorXd()) {
  MatrixXd cost(2, 1);
  cost << 1.0, 0.0;
  return make_mdp(cost, {{{0, 1}}, {{0, 1}}}, gamma, rho);
}

FiniteMdp one_state_two_actions(double c0, double c1, double gamma) {
  MatrixXd cost(1, 2);
  cost << c0, c1;
  return make_mdp(cost, {{{1.0}, {1.0}}}, gamma);
}

}  // namespace

TEST(FiniteMdp, RejectsInvalidInputs) {
  MatrixXd cost = MatrixXd::Ones(2, 1);
  MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.0, 1.0;
  VectorXd rho = VectorXd::Constant(2, 0.5);
  EXPECT_NO_THROW(FiniteMdp(cost, p, 0.9, rho));
  EXPECT_THROW(FiniteMdp(cost, p, 1.0, rho), ContractViolation);
  EXPECT_THROW(FiniteMdp(cost, p, -0.1, rho), ContractViolation);
  EXPECT_THROW(FiniteMdp(-cost, p, 0.9, rho), ContractViolation);
  MatrixXd bad = p;
  bad(0, 0) = 0.6;
  EXPECT_THROW(FiniteMdp(cost, bad, 0.9, rho), ContractViolation);
  EXPECT_THROW(FiniteMdp(cost, p, 0.9, VectorXd::Constant(2, 0.6)), ContractViolation);
  EXPECT_THROW(FiniteMdp(MatrixXd::Ones(3, 1), p, 0.9, rho), ContractViolation);
  MatrixXd nan_cost = cost;
  nan_cost(0, 0) = std::nan("");
  EXPECT_THROW(FiniteMdp(nan_cost, p, 0.9, rho), ContractViolation);
}

TEST(PolicyMatrix, ValidatesRows) {
  MatrixXd probs(1, 2);
  probs << 0.3, 0.7;
  EXPECT_NO_THROW(PolicyMatrix{probs});
  probs << 0.3, 0.8;
  EXPECT_THROW(PolicyMatrix{probs}, ContractViolation);
  probs << -0.1, 1.1;
  EXPECT_THROW(PolicyMatrix{probs}, ContractViolation);
  EXPECT_TRUE(PolicyMatrix::deterministic({1, 0}, 2).is_deterministic());
  EXPECT_FALSE(PolicyMatrix::uniform(2, 2).is_deterministic());
}

TEST(ApplyP, Examples) {
  const FiniteMdp mdp = seeded_mdp(5, 3, 1);
  EXPECT_EQ(apply_P(mdp, VectorXd::Zero(5)).cwiseAbs().maxCoeff(), 0.0);

  const FiniteMdp loop = one_state_two_actions(1.0, 2.0, 0.5);
  const QFn q = apply_P(loop, VectorXd::Constant(1, 3.0));
  EXPECT_DOUBLE_EQ(q(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(q(0, 1), 3.0);

  MatrixXd cost = MatrixXd::Zero(2, 2);
  const FiniteMdp two = make_mdp(cost, {{{0, 1}, {0, 1}}, {{0, 1}, {0, 1}}}, 0.5);
  VectorXd v(2);
  v << 5, 7;
  const QFn q2 = apply_P(two, v);
  EXPECT_TRUE((q2.array() == 7.0).all());

  EXPECT_THROW(apply_P(two, VectorXd::Zero(3)), ContractViolation);
}

TEST(ApplyP, MatchesTripleLoop) {
  const FiniteMdp mdp = seeded_mdp(7, 4, 2);
  const VectorXd v = VectorXd::LinSpaced(7, -1.0, 2.0);
  const QFn q = apply_P(mdp, v);
  for (Index s = 0; s < 7; ++s) {
    for (Index a = 0; a < 4; ++a) {
      double sum = 0.0;
      for (Index t = 0; t < 7; ++t) sum += mdp.transition_prob(s, a, t) * v(t);
      EXPECT_NEAR(q(s, a), sum, 1e-14);
    }
  }
}

TEST(ApplyPolicy, Examples) {
  QFn q(2, 2);
  q << 1, 9, 2, 4;
  const VectorXd picked = apply_policy(PolicyMatrix::deterministic({1, 0}, 2), q);
  EXPECT_DOUBLE_EQ(picked(0), 9.0);
  EXPECT_DOUBLE_EQ(picked(1), 2.0);

  EXPECT_DOUBLE_EQ(apply_policy(PolicyMatrix::uniform(2, 2), q)(1), 3.0);

  MatrixXd probs(1, 2);
  probs << 0.25, 0.75;
  QFn row(1, 2);
  row << 0, 4;
  EXPECT_DOUBLE_EQ(apply_policy(PolicyMatrix(probs), row)(0), 3.0);
  EXPECT_THROW(apply_policy(PolicyMatrix(probs), q), ContractViolation);
}

TEST(TransitionUnderPolicy, Examples) {
  const FiniteMdp chain_mdp = chain(0.5);
  EXPECT_EQ(transition_under_policy(chain_mdp, PolicyMatrix::uniform(2, 1)), chain_mdp.transition());

  MatrixXd cost = MatrixXd::Zero(2, 2);
  const FiniteMdp split = make_mdp(cost, {{{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}}, 0.5);
  const MatrixXd p_pi = transition_under_policy(split, PolicyMatrix::uniform(2, 2));
  EXPECT_DOUBLE_EQ(p_pi(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p_pi(0, 1), 0.5);

  const FiniteMdp mdp = seeded_mdp(5, 3, 3);
  const PolicyMatrix pi = seeded_policy(5, 3, 4);
  const MatrixXd fast = transition_under_policy(mdp, pi);
  for (Index s = 0; s < 5; ++s) {
    for (Index t = 0; t < 5; ++t) {
      double sum = 0.0;
      for (Index a = 0; a < 3; ++a) sum += pi(s, a) * mdp.transition_prob(s, a, t);
      EXPECT_NEAR(fast(s, t), sum, 1e-15);
    }
    EXPECT_NEAR(fast.row(s).sum(), 1.0, 1e-10);
  }
}

TEST(OccupancyResolvent, Examples) {
  const FiniteMdp loop = one_state_two_actions(1.0, 2.0, 0.9);
  EXPECT_NEAR(occupancy_resolvent(loop, PolicyMatrix::uniform(1, 2))(0, 0), 10.0, 1e-12);

  const FiniteMdp mdp0 = seeded_mdp(6, 2, 5, 0.0);
  EXPECT_LE(sup_diff(occupancy_resolvent(mdp0, PolicyMatrix::uniform(6, 2)), MatrixXd::Identity(6, 6)),
            0.0);
}

TEST(OccupancyResolvent, MatchesNeumannSeries) {
  for (double gamma : {0.5, 0.9, 0.95}) {
    const FiniteMdp mdp = seeded_mdp(10, 3, 6, gamma);
    const PolicyMatrix pi = seeded_policy(10, 3, 7);
    const MatrixXd p_pi = transition_under_policy(mdp, pi);
    MatrixXd term = MatrixXd::Identity(10, 10);
    MatrixXd sum = MatrixXd::Zero(10, 10);
    for (int t = 0; t <= 2000; ++t) {
      sum += term;
      term = gamma * term * p_pi;
    }
    const MatrixXd sigma = occupancy_resolvent(mdp, pi);
    EXPECT_LE(sup_diff(sigma, sum), 1e-6) << "gamma=" << gamma;
    EXPECT_LE(sup_diff((MatrixXd::Identity(10, 10) - gamma * p_pi) * sigma, MatrixXd::Identity(10, 10)),
              1e-8);
  }
}

TEST(AdjointOccupancy, Examples) {
  const FiniteMdp loop = one_state_two_actions(1.0, 2.0, 0.95);
  EXPECT_NEAR(adjoint_occupancy(loop, PolicyMatrix::uniform(1, 2))(0), 20.0, 1e-10);

  const FiniteMdp mdp0 = seeded_mdp(4, 2, 8, 0.0);
  EXPECT_LE(sup_diff(adjoint_occupancy(mdp0, PolicyMatrix::uniform(4, 2)), mdp0.rho()), 0.0);

  VectorXd delta0(2);
  delta0 << 1.0, 0.0;
  const FiniteMdp c = chain(0.5, delta0);
  const VectorXd d = adjoint_occupancy(c, PolicyMatrix::uniform(2, 1));
  EXPECT_NEAR(d(0), 1.0, 1e-12);
  EXPECT_NEAR(d(1), 1.0, 1e-12);

  const FiniteMdp mdp = seeded_mdp(12, 3, 9, 0.95);
  EXPECT_NEAR(adjoint_occupancy(mdp, seeded_policy(12, 3, 10)).sum(), 20.0, 1e-8);
}

TEST(EvaluatePolicy, Examples) {
  const FiniteMdp mdp = seeded_mdp(6, 3, 11, 0.9);
  const PolicyMatrix pi = seeded_policy(6, 3, 12);
  const FiniteMdp ones = mdp.with_cost(MatrixXd::Ones(6, 3));
  EXPECT_LE(sup_diff(evaluate_policy(ones, pi), VectorXd::Constant(6, 10.0)), 1e-10);
  const FiniteMdp zeros = mdp.with_cost(MatrixXd::Zero(6, 3));
  EXPECT_EQ(evaluate_policy(zeros, pi).cwiseAbs().maxCoeff(), 0.0);

  const VectorXd v = evaluate_policy(chain(0.5), PolicyMatrix::uniform(2, 1));
  EXPECT_NEAR(v(0), 1.0, 1e-12);
  EXPECT_NEAR(v(1), 0.0, 1e-12);
}

TEST(EvaluatePolicy, IsFixedPointOfTpi) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiniteMdp mdp = seeded_mdp(15, 4, 100 + seed, 0.95);
    const PolicyMatrix pi = seeded_policy(15, 4, 200 + seed);
    const VectorXd v = evaluate_policy(mdp, pi);
    const VectorXd t_pi = policy_cost(mdp, pi) + mdp.gamma() * transition_under_policy(mdp, pi) * v;
    EXPECT_LE(sup_diff(v, t_pi), 1e-8);
    EXPECT_NEAR(objective(mdp, pi), v.dot(mdp.rho()), 1e-12);
  }
}

TEST(Advantage, Examples) {
  const FiniteMdp mdp = seeded_mdp(5, 3, 13);
  const PolicyMatrix pi = seeded_policy(5, 3, 14);
  EXPECT_EQ(advantage(mdp.with_cost(MatrixXd::Zero(5, 3)), pi).cwiseAbs().maxCoeff(), 0.0);

  const FiniteMdp single = seeded_mdp(5, 1, 15);
  EXPECT_LE(advantage(single, PolicyMatrix::uniform(5, 1)).cwiseAbs().maxCoeff(), 1e-12);

  const QFn adv = advantage(mdp, pi);
  EXPECT_LE(apply_policy(pi, adv).cwiseAbs().maxCoeff(), 1e-8);
  const QFn q = q_function(mdp, pi);
  EXPECT_LE(sup_diff(q, mdp.cost() + mdp.gamma() * apply_P(mdp, evaluate_policy(mdp, pi))), 1e-12);
}

TEST(Advantage, PolicyWeightedAdvantageVanishes) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FiniteMdp mdp = seeded_mdp(3 + Index(seed % 20), 1 + Index(seed % 6), 300 + seed, 0.95);
    const PolicyMatrix pi = seeded_policy(mdp.n_states(), mdp.n_actions(), 400 + seed);
    EXPECT_LE(apply_policy(pi, advantage(mdp, pi)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(BellmanOptimal, Examples) {
  const FiniteMdp mdp = seeded_mdp(6, 3, 16);
  const GreedyBackup zero = bellman_optimal(mdp, VectorXd::Zero(6));
  EXPECT_LE(sup_diff(zero.value, mdp.cost().rowwise().minCoeff()), 0.0);

  const FiniteMdp loop = one_state_two_actions(1.0, 2.0, 0.5);
  const GreedyBackup b = bellman_optimal(loop, VectorXd::Zero(1));
  EXPECT_DOUBLE_EQ(b.value(0), 1.0);
  EXPECT_EQ(b.actions[0], 0);
  EXPECT_EQ(b.policy, PolicyMatrix::deterministic({0}, 2));

  // Ties go to the lowest index.
  const FiniteMdp tie = one_state_two_actions(1.0, 1.0, 0.5);
  EXPECT_EQ(bellman_optimal(tie, VectorXd::Zero(1)).actions[0], 0);
}

TEST(BellmanOptimal, IsMonotone) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const FiniteMdp mdp = seeded_mdp(10, 4, 500 + seed, 0.9);
    VectorXd v1(10), bump(10);
    for (Index i = 0; i < 10; ++i) {
      v1(i) = 5.0 * unit(rng);
      bump(i) = unit(rng);
    }
    const VectorXd t1 = bellman_optimal(mdp, v1).value;
    const VectorXd t2 = bellman_optimal(mdp, v1 + bump).value;
    EXPECT_TRUE(((t2 - t1).array() >= 0.0).all());
  }
}

TEST(ShapeCost, ZeroAndConstantPotentials) {
  const FiniteMdp mdp = seeded_mdp(8, 3, 18, 0.9);
  const ShapedMdp same = shape_cost(mdp, VectorXd::Zero(8));
  EXPECT_LE(sup_diff(same.mdp.cost(), mdp.cost()), 0.0);
  EXPECT_EQ(same.shift, 0.0);

  // A constant potential k moves every cost by (gamma - 1) k; the shift puts the minimum back at >= 0.
  const double k = 3.0;
  const ShapedMdp shifted = shape_cost(mdp, VectorXd::Constant(8, k));
  const double expected_shift = std::max(0.0, -(mdp.cost().minCoeff() + (mdp.gamma() - 1.0) * k));
  EXPECT_NEAR(shifted.shift, expected_shift, 1e-12);
  EXPECT_LE(sup_diff(shifted.mdp.cost(),
                     (mdp.cost().array() + (mdp.gamma() - 1.0) * k + expected_shift).matrix()),
            1e-12);
  EXPECT_GE(shifted.mdp.cost().minCoeff(), 0.0);

  SolverConfig config;
  config.max_iters = 100000;
  config.tol = 1e-11;
  const QFn q = q_from_value(mdp, value_iteration(mdp, config).value);
  const QFn q_shaped = q_from_value(shifted.mdp, value_iteration(shifted.mdp, config).value);
  EXPECT_EQ(greedy_actions(q), greedy_actions(q_shaped));
}

TEST(ShapeCost, OptimalPotentialKeepsGreedySetAndShiftsValue) {
  const FiniteMdp mdp = seeded_mdp(10, 4, 19, 0.9);
  SolverConfig config;
  config.max_iters = 100000;
  config.tol = 1e-11;
  const ValueFn v_star = value_iteration(mdp, config).value;
  const ValueFn& phi = v_star;
  const ShapedMdp shaped = shape_cost(mdp, phi);
  const ValueFn v_tilde = value_iteration(shaped.mdp, config).value;
  const VectorXd expected = v_star - phi + VectorXd::Constant(10, shaped.shift / (1.0 - mdp.gamma()));
  EXPECT_LE(sup_diff(v_tilde, expected), 1e-8);

  const QFn q = q_from_value(mdp, v_star);
  const QFn q_tilde = q_from_value(shaped.mdp, v_tilde);
  for (Index s = 0; s < 10; ++s) {
    for (Index a = 0; a < 4; ++a) {
      const bool optimal = q(s, a) <= q.row(s).minCoeff() + 1e-9;
      const bool optimal_tilde = q_tilde(s, a) <= q_tilde.row(s).minCoeff() + 1e-9;
      EXPECT_EQ(optimal, optimal_tilde) << "s=" << s << " a=" << a;
    }
  }
}

TEST(SpectralRadius, StochasticPolicyRadiusIsGamma) {
  const double gamma = 0.95;
  EXPECT_NEAR(spectral_radius_estimate(gamma * MatrixXd::Identity(6, 6)), gamma, 1e-6);
  EXPECT_EQ(spectral_radius_estimate(MatrixXd::Zero(4, 4)), 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiniteMdp mdp = seeded_mdp(20, 3, 600 + seed, gamma);
    const MatrixXd m = gamma * transition_under_policy(mdp, seeded_policy(20, 3, 700 + seed));
    EXPECT_LE(spectral_radius_estimate(m), gamma + 1e-6);
  }
}

TEST(MdpIo, RoundTripIsExact) {
  const FiniteMdp mdp = seeded_mdp(6, 3, 20, 0.95);
  const auto path = std::filesystem::temp_directory_path() / "opmdp_roundtrip_mdp.json";
  save_mdp(mdp, path);
  const FiniteMdp back = load_mdp(path);
  EXPECT_EQ(back.cost(), mdp.cost());
  EXPECT_EQ(back.transition(), mdp.transition());
  EXPECT_EQ(back.rho(), mdp.rho());
  EXPECT_EQ(back.gamma(), mdp.gamma());

  const PolicyMatrix pi = seeded_policy(6, 3, 21);
  save_policy(pi, path);
  EXPECT_EQ(load_policy(path), pi);
  std::filesystem::remove(path);
}

TEST(MdpIo, ReportsMissingFields) {
  nlohmann::json doc = mdp_to_json(seeded_mdp(3, 2, 22));
  doc.erase("gamma");
  EXPECT_THROW(mdp_from_json(doc), ContractViolation);
}
