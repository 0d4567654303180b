#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "opmdp/errors.hpp"
#include "opmdp/lqr.hpp"

using namespace opmdp::lqr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal(rng);
  return out;
}

LqrSystem seeded_system(Eigen::Index n, Eigen::Index m, std::uint64_t seed, double gamma = 1.0) {
  std::mt19937_64 rng(seed);
  LqrSystem sys;
  sys.a_matrix = gaussian(n, n, rng, 0.6);
  sys.b_matrix = gaussian(n, m, rng);
  const MatrixXd l = gaussian(n, n, rng);
  sys.q_cost = l * l.transpose() + 0.1 * MatrixXd::Identity(n, n);
  const MatrixXd r = gaussian(m, m, rng);
  sys.r_cost = r * r.transpose() + MatrixXd::Identity(m, m);
  sys.gamma = gamma;
  return sys;
}

// Discounted Riccati recursion; returns the limiting gain.
LinearPolicy riccati_gain(const LqrSystem& sys) {
  const double g = sys.gamma;
  const MatrixXd& a = sys.a_matrix;
  const MatrixXd& b = sys.b_matrix;
  MatrixXd p = sys.q_cost;
  MatrixXd k;
  for (int it = 0; it < 5000; ++it) {
    k = (sys.r_cost + g * b.transpose() * p * b).ldlt().solve(g * b.transpose() * p * a);
    const MatrixXd closed = a - b * k;
    p = sys.q_cost + k.transpose() * sys.r_cost * k + g * closed.transpose() * p * closed;
  }
  return LinearPolicy{k};
}

double min_eigenvalue(const MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

}  // namespace

TEST(LqrSystem, Validation) {
  LqrSystem sys = seeded_system(3, 2, 1);
  EXPECT_NO_THROW(sys.validate());
  LqrSystem bad_r = sys;
  bad_r.r_cost = MatrixXd::Zero(2, 2);
  EXPECT_THROW(bad_r.validate(), opmdp::ContractViolation);
  LqrSystem bad_q = sys;
  bad_q.q_cost(0, 1) += 1.0;
  EXPECT_THROW(bad_q.validate(), opmdp::ContractViolation);
  LqrSystem indefinite = sys;
  indefinite.q_cost = -MatrixXd::Identity(3, 3);
  EXPECT_THROW(indefinite.validate(), opmdp::ContractViolation);
  LqrSystem bad_gamma = sys;
  bad_gamma.gamma = 0.0;
  EXPECT_THROW(bad_gamma.validate(), opmdp::ContractViolation);
}

TEST(SpectralRadius, Examples) {
  LqrSystem sys = seeded_system(3, 3, 2);
  sys.b_matrix = MatrixXd::Identity(3, 3);
  EXPECT_NEAR(closed_loop_spectral_radius(sys, LinearPolicy{sys.a_matrix}), 0.0, 1e-15);

  LqrSystem diag;
  diag.a_matrix = 0.5 * MatrixXd::Identity(2, 2);
  diag.b_matrix = MatrixXd::Zero(2, 1);
  diag.q_cost = MatrixXd::Identity(2, 2);
  diag.r_cost = MatrixXd::Identity(1, 1);
  EXPECT_NEAR(closed_loop_spectral_radius(diag, LinearPolicy{MatrixXd::Zero(1, 2)}), 0.5, 1e-15);
  diag.gamma = 0.25;
  EXPECT_NEAR(closed_loop_spectral_radius(diag, LinearPolicy{MatrixXd::Zero(1, 2)}), 0.25, 1e-15);
}

TEST(SpectralRadius, RiccatiGainStabilizes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LqrSystem sys = seeded_system(4, 2, 10 + seed);
    sys.a_matrix *= 2.0;  // typically open-loop unstable
    const LinearPolicy k = riccati_gain(sys);
    EXPECT_LT(closed_loop_spectral_radius(sys, k), 1.0) << "seed " << seed;
  }
}

TEST(EvaluateLinearPolicy, Examples) {
  LqrSystem zero = seeded_system(3, 2, 3);
  zero.q_cost.setZero();
  zero.a_matrix *= 0.1;
  EXPECT_EQ(evaluate_linear_policy(zero, LinearPolicy{MatrixXd::Zero(2, 3)}).cwiseAbs().maxCoeff(), 0.0);

  LqrSystem scalar;
  scalar.a_matrix = MatrixXd::Constant(1, 1, 0.5);
  scalar.b_matrix = MatrixXd::Zero(1, 1);
  scalar.q_cost = MatrixXd::Ones(1, 1);
  scalar.r_cost = MatrixXd::Ones(1, 1);
  EXPECT_NEAR(evaluate_linear_policy(scalar, LinearPolicy{MatrixXd::Zero(1, 1)})(0, 0), 4.0 / 3.0, 1e-12);

  scalar.a_matrix(0, 0) = 1.5;
  EXPECT_THROW(evaluate_linear_policy(scalar, LinearPolicy{MatrixXd::Zero(1, 1)}), opmdp::ContractViolation);
  // Discounting can restore stability: sqrt(0.4) * 1.5 < 1.
  scalar.gamma = 0.4;
  EXPECT_NEAR(evaluate_linear_policy(scalar, LinearPolicy{MatrixXd::Zero(1, 1)})(0, 0), 1.0 / (1.0 - 0.9),
              1e-11);
}

TEST(EvaluateLinearPolicy, LyapunovResidualAndPsd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LqrSystem sys = seeded_system(3, 2, 20 + seed, 0.95);
    const LinearPolicy k = riccati_gain(sys);
    const MatrixXd v = evaluate_linear_policy(sys, k);
    const MatrixXd closed = sys.a_matrix - sys.b_matrix * k.k_gain;
    const MatrixXd residual = v - sys.q_cost - k.k_gain.transpose() * sys.r_cost * k.k_gain -
                              sys.gamma * closed.transpose() * v * closed;
    EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((v - v.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(min_eigenvalue(v), -1e-8);
  }
}

TEST(EvaluateLinearPolicy, MatchesRolloutCost) {
  const LqrSystem sys = seeded_system(3, 2, 30, 0.9);
  const LinearPolicy k = riccati_gain(sys);
  const MatrixXd v = evaluate_linear_policy(sys, k);
  std::mt19937_64 rng(31);
  const VectorXd x0 = gaussian(3, 1, rng);
  VectorXd x = x0;
  double total = 0.0, discount = 1.0;
  for (int t = 0; t < 2000; ++t) {
    const VectorXd u = -k.k_gain * x;
    total += discount * (x.dot(sys.q_cost * x) + u.dot(sys.r_cost * u));
    x = sys.a_matrix * x + sys.b_matrix * u;
    discount *= sys.gamma;
  }
  EXPECT_NEAR(total, x0.dot(v * x0), 1e-9 * (1.0 + total));
}

TEST(KappaP, Examples) {
  LqrSystem sys;
  sys.a_matrix = MatrixXd::Zero(2, 2);
  sys.b_matrix = MatrixXd::Zero(2, 1);
  sys.q_cost = MatrixXd::Identity(2, 2);
  sys.r_cost = MatrixXd::Identity(1, 1);
  EXPECT_EQ(lqr_kappa_p(sys), 0.0);
  sys.a_matrix = MatrixXd::Identity(2, 2);
  EXPECT_DOUBLE_EQ(lqr_kappa_p(sys), 2.0);
}

TEST(KappaP, DominatesRandomizedRatios) {
  const LqrSystem sys = seeded_system(3, 2, 40);
  const double kappa = lqr_kappa_p(sys);
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> pick(0, 999);
  std::uniform_real_distribution<double> log_scale(std::log(0.1), std::log(100.0));
  std::vector<MatrixXd> pool;
  for (int i = 0; i < 1000; ++i) {
    const MatrixXd l = gaussian(3, 3, rng);
    MatrixXd q = l * l.transpose();
    q /= Eigen::SelfAdjointEigenSolver<MatrixXd>(q).eigenvalues().maxCoeff();
    pool.push_back(q);
  }
  double sup = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const VectorXd s = gaussian(3, 1, rng) * std::exp(log_scale(rng));
    const VectorXd a = gaussian(2, 1, rng) * std::exp(log_scale(rng));
    const VectorXd next = sys.a_matrix * s + sys.b_matrix * a;
    const double ratio = next.dot(pool[std::size_t(pick(rng))] * next) / (1.0 + s.squaredNorm() + a.squaredNorm());
    sup = std::max(sup, ratio);
  }
  EXPECT_LE(sup, kappa);
  EXPECT_GT(sup, 0.0);
}

TEST(CompletingSquare, Examples) {
  LqrSystem scalar;
  scalar.a_matrix = MatrixXd::Ones(1, 1);
  scalar.b_matrix = MatrixXd::Ones(1, 1);
  scalar.q_cost = MatrixXd::Ones(1, 1);
  scalar.r_cost = MatrixXd::Ones(1, 1);
  EXPECT_DOUBLE_EQ(completing_square_minimizer(scalar, MatrixXd::Ones(1, 1), 1.0).k_gain(0, 0), 1.0);

  const LqrSystem sys = seeded_system(3, 2, 50);
  EXPECT_EQ(completing_square_minimizer(sys, sys.q_cost, 0.0).k_gain.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(completing_square_minimizer(sys, sys.q_cost, 1.5), opmdp::ContractViolation);
}

TEST(CompletingSquare, DescentOracleAndStationarity) {
  const LqrSystem sys = seeded_system(3, 2, 51);
  std::mt19937_64 rng(52);
  const MatrixXd l = gaussian(3, 3, rng);
  const MatrixXd q = l * l.transpose();
  for (double lambda : {0.3, 1.0}) {
    const LinearPolicy k = completing_square_minimizer(sys, q, lambda);
    const double step = 0.5 / Eigen::SelfAdjointEigenSolver<MatrixXd>(sys.r_cost).eigenvalues().maxCoeff();
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd s = gaussian(3, 1, rng);
      const VectorXd linear = lambda * sys.b_matrix.transpose() * q * sys.a_matrix * s;
      VectorXd a = VectorXd::Zero(2);
      for (int it = 0; it < 20000; ++it) {
        const VectorXd grad = 2.0 * sys.r_cost * a + 2.0 * linear;
        if (grad.norm() < 1e-13) break;
        a -= step * grad;
      }
      const VectorXd closed_form = -k.k_gain * s;
      EXPECT_LE((a - closed_form).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((2.0 * sys.r_cost * closed_form + 2.0 * linear).norm(), 1e-8);
      EXPECT_LE(completing_square_objective(sys, q, lambda, s, closed_form),
                completing_square_objective(sys, q, lambda, s, closed_form + 1e-3 * gaussian(2, 1, rng)));
    }
  }
}

TEST(QuadraticClosure, SubstitutedQuadraticIsPsd) {
  // q(s, a) = [s; a]' [[Qss, N], [N', Raa]] [s; a]; with Qss - N Raa^{-1} N' >= 0 every
  // substitution a = -Ks leaves a PSD matrix in s.
  std::mt19937_64 rng(60);
  for (int trial = 0; trial < 200; ++trial) {
    const MatrixXd r_root = gaussian(2, 2, rng);
    const MatrixXd raa = r_root * r_root.transpose() + 0.1 * MatrixXd::Identity(2, 2);
    const MatrixXd n = gaussian(3, 2, rng);
    const MatrixXd extra = gaussian(3, 3, rng);
    const MatrixXd qss = n * raa.ldlt().solve(n.transpose()) + extra * extra.transpose();
    const MatrixXd k = gaussian(2, 3, rng, 3.0);
    const MatrixXd composed = qss - n * k - k.transpose() * n.transpose() + k.transpose() * raa * k;
    EXPECT_GE(min_eigenvalue(composed), -1e-9 * (1.0 + composed.norm()));
  }
}

TEST(QuadraticClosure, PolicyQFunctionsSatisfyGeneratorCondition) {
  // The q-function of a stable linear policy has blocks Q + gAVA', gA'VB, R + gB'VB.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LqrSystem sys = seeded_system(3, 2, 70 + seed, 0.9);
    LinearPolicy k = riccati_gain(sys);
    std::mt19937_64 rng(seed);
    k.k_gain += gaussian(2, 3, rng, 0.05);
    if (closed_loop_spectral_radius(sys, k) >= 1.0) continue;
    const MatrixXd v = evaluate_linear_policy(sys, k);
    const double g = sys.gamma;
    const MatrixXd qss = sys.q_cost + g * sys.a_matrix.transpose() * v * sys.a_matrix;
    const MatrixXd n = g * sys.a_matrix.transpose() * v * sys.b_matrix;
    const MatrixXd raa = sys.r_cost + g * sys.b_matrix.transpose() * v * sys.b_matrix;
    const MatrixXd schur = qss - n * raa.ldlt().solve(n.transpose());
    EXPECT_GE(min_eigenvalue(schur), -1e-9 * (1.0 + qss.norm())) << "seed " << seed;
  }
}
