#include "opmdp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "opmdp/errors.hpp"
#include "opmdp/garnet.hpp"
#include "opmdp/lqr.hpp"

namespace opmdp {

void VerificationReport::absorb(const VerificationReport& other, std::uint64_t seed) {
  if (instances_tested == 0 || other.max_abs_error > max_abs_error) {
    max_abs_error = std::max(max_abs_error, other.max_abs_error);
    worst_seed = seed;
  }
  instances_tested += other.instances_tested;
  passed = passed && other.passed;
  if (!std::isnan(other.condition_number)) {
    condition_number = std::isnan(condition_number) ? other.condition_number
                                                    : std::max(condition_number, other.condition_number);
  }
  if (!std::isnan(other.slope) &&
      (std::isnan(slope) || std::abs(other.slope - 1.0) > std::abs(slope - 1.0))) {
    slope = other.slope;
  }
  if (!std::isnan(other.min_slack)) {
    min_slack = std::isnan(min_slack) ? other.min_slack : std::min(min_slack, other.min_slack);
  }
}

void VerificationReport::finalize() { passed = passed && max_abs_error <= tolerance; }

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VerificationReport make_report(const std::string& name, double tolerance) {
  VerificationReport report;
  report.check_name = name;
  report.tolerance = tolerance;
  report.instances_tested = 1;
  return report;
}

void require_pair(const FiniteMdp& mdp, const PolicyMatrix& pi, const PolicyMatrix& pi_prime) {
  require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
          "pi shape does not match the MDP");
  require(pi_prime.n_states() == mdp.n_states() && pi_prime.n_actions() == mdp.n_actions(),
          "pi' shape does not match the MDP");
}

MatrixXd resolvent_base(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  return MatrixXd::Identity(mdp.n_states(), mdp.n_states()) -
         mdp.gamma() * transition_under_policy(mdp, pi);
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double condition_number_2(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const VectorXd& sv = svd.singularValues();
  return sv(0) / sv(sv.size() - 1);
}

}  // namespace

VerificationReport check_perturbation_identity(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                               const PolicyMatrix& pi_prime, double epsilon) {
  require_pair(mdp, pi, pi_prime);
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  VerificationReport report = make_report("perturbation_identity", 1e-8);

  const Index n = mdp.n_states();
  const MatrixXd a = resolvent_base(mdp, pi);
  const MatrixXd b = -mdp.gamma() *
                     (transition_under_policy(mdp, pi_prime) - transition_under_policy(mdp, pi));
  const MatrixXd identity = MatrixXd::Identity(n, n);
  const MatrixXd a_inv = a.partialPivLu().solve(identity);
  // A + eps B is I - gamma P of the mixture policy; build it from the mixture itself.
  const MatrixXd a_eps_inv =
      resolvent_base(mdp, pi.mix(pi_prime, epsilon)).partialPivLu().solve(identity);

  const MatrixXd left_form = a_inv - epsilon * a_eps_inv * b * a_inv;
  const MatrixXd right_form = a_inv - epsilon * a_inv * b * a_eps_inv;
  const MatrixXd second_order = a_inv - epsilon * a_inv * b * a_inv +
                                epsilon * epsilon * a_inv * b * a_eps_inv * b * a_inv;
  report.max_abs_error = std::max({max_abs(a_eps_inv - left_form), max_abs(a_eps_inv - right_form),
                                   max_abs(a_eps_inv - second_order)});
  report.condition_number = condition_number_2(a);
  report.finalize();
  return report;
}

VerificationReport check_policy_difference(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                           const PolicyMatrix& pi_prime) {
  require_pair(mdp, pi, pi_prime);
  VerificationReport report = make_report("policy_difference", 1e-8);
  const double gamma = mdp.gamma();

  const ValueFn v = evaluate_policy(mdp, pi);
  const ValueFn v_prime = evaluate_policy(mdp, pi_prime);
  const QFn q = q_from_value(mdp, v);
  const QFn adv = q.colwise() - v;
  const MatrixXd sigma = occupancy_resolvent(mdp, pi);
  const MatrixXd sigma_prime = occupancy_resolvent(mdp, pi_prime);
  const MatrixXd p_delta = transition_under_policy(mdp, pi_prime) - transition_under_policy(mdp, pi);

  const VectorXd dq = apply_policy(pi_prime, q) - v;
  const VectorXd dq_from_adv = apply_policy(pi_prime, adv);
  const VectorXd first_order = sigma * dq_from_adv;

  VectorXd paths[4];
  paths[0] = v_prime - v;
  paths[1] = sigma_prime * dq;
  paths[2] = first_order + gamma * (sigma * (p_delta * (sigma_prime * dq)));
  paths[3] = first_order + gamma * (sigma_prime * (p_delta * (sigma * dq)));

  double err = (dq - dq_from_adv).lpNorm<Eigen::Infinity>();
  // pi A_pi = 0 is the identity behind dq = pi' A_pi.
  err = std::max(err, apply_policy(pi, adv).lpNorm<Eigen::Infinity>());
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) err = std::max(err, (paths[i] - paths[j]).lpNorm<Eigen::Infinity>());
  }
  report.max_abs_error = err;
  report.condition_number = condition_number_2(resolvent_base(mdp, pi));
  report.finalize();
  return report;
}

VerificationReport check_gateaux_derivative(const FiniteMdp& mdp, const PolicyMatrix& pi,
                                            const PolicyMatrix& pi_prime,
                                            const std::vector<double>& epsilons) {
  require_pair(mdp, pi, pi_prime);
  require(!epsilons.empty(), "need at least one epsilon");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] > 0.0 && epsilons[i] <= 1.0, "epsilons must lie in (0, 1]");
    require(i == 0 || epsilons[i] < epsilons[i - 1], "epsilons must be decreasing");
  }
  VerificationReport report = make_report("gateaux_derivative", 1e-8);
  const double gamma = mdp.gamma();

  const ValueFn v = evaluate_policy(mdp, pi);
  const QFn adv = q_from_value(mdp, v).colwise() - v;
  const VectorXd dq = apply_policy(pi_prime, adv);
  const MatrixXd sigma = occupancy_resolvent(mdp, pi);
  const VectorXd l = sigma * dq;
  const MatrixXd p_delta = transition_under_policy(mdp, pi_prime) - transition_under_policy(mdp, pi);
  const double scale = 1.0 + v.lpNorm<Eigen::Infinity>();

  std::vector<double> log_eps;
  std::vector<double> log_err;
  double remainder_err = 0.0;
  for (double eps : epsilons) {
    const PolicyMatrix mixed = pi.mix(pi_prime, eps);
    const ValueFn v_eps = evaluate_policy(mdp, mixed);
    const VectorXd remainder =
        eps * eps * gamma * (sigma * (p_delta * (occupancy_resolvent(mdp, mixed) * dq)));
    remainder_err = std::max(remainder_err, (v_eps - v - eps * l - remainder).lpNorm<Eigen::Infinity>());

    const double quotient_err = ((v_eps - v) / eps - l).lpNorm<Eigen::Infinity>();
    // Rounding in v_eps - v is amplified by 1/eps; only errors well above it carry a slope.
    const double noise = 1e4 * std::numeric_limits<double>::epsilon() * scale / eps;
    if (quotient_err > noise) {
      log_eps.push_back(std::log(eps));
      log_err.push_back(std::log(quotient_err));
    }
  }
  report.max_abs_error = remainder_err;

  bool slope_ok = true;
  if (log_eps.size() >= 2) {
    const double k = double(log_eps.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
      mx += log_eps[i] / k;
      my += log_err[i] / k;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
      sxy += (log_eps[i] - mx) * (log_err[i] - my);
      sxx += (log_eps[i] - mx) * (log_eps[i] - mx);
    }
    report.slope = sxy / sxx;
    slope_ok = report.slope >= 0.9 && report.slope <= 1.1;
  }
  report.passed = slope_ok;
  report.finalize();
  return report;
}

VerificationReport check_majorization(const FiniteMdp& mdp, const KernelMetric& metric,
                                      const PolicyMatrix& pi, const PolicyMatrix& pi_prime,
                                      double beta) {
  require_pair(mdp, pi, pi_prime);
  require(metric.n_states() == mdp.n_states() && metric.n_actions() == mdp.n_actions(),
          "metric shape does not match the MDP");
  require(beta >= 0.0, "beta must be non-negative");
  VerificationReport report = make_report("majorization", 1e-8);

  const ValueFn v = evaluate_policy(mdp, pi);
  const QFn adv = q_from_value(mdp, v).colwise() - v;
  const MatrixXd sigma = occupancy_resolvent(mdp, pi);
  const VectorXd lhs = evaluate_policy(mdp, pi_prime) - v;
  const double ipm = policy_ipm(metric, pi, pi_prime);
  const VectorXd rhs = sigma * apply_policy(pi_prime, adv) +
                       sigma * (beta * ipm * ipm * metric.weight_s());

  const VectorXd slack = rhs - lhs;
  const VectorXd d = adjoint_occupancy(mdp, pi);
  const double scalar_slack = rhs.dot(mdp.rho()) - lhs.dot(mdp.rho());
  const double paired_slack = rhs.dot(d) - lhs.dot(d);
  report.min_slack = std::min({slack.minCoeff(), scalar_slack, paired_slack});
  report.max_abs_error = std::max(0.0, -report.min_slack);
  report.finalize();
  return report;
}

VerificationReport check_spectral_stability(const FiniteMdp& mdp, const PolicyMatrix& pi) {
  require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
          "pi shape does not match the MDP");
  VerificationReport report = make_report("spectral_stability", 1e-6);
  const double gamma = mdp.gamma();
  const MatrixXd p_pi = transition_under_policy(mdp, pi);

  const double radius = spectral_radius_estimate(gamma * p_pi);
  const ValueFn v = evaluate_policy(mdp, pi);
  const VectorXd c = policy_cost(mdp, pi);

  constexpr int kTerms = 1000;
  VectorXd term = c;
  VectorXd partial = VectorXd::Zero(c.size());
  for (int t = 0; t < kTerms; ++t) {
    partial += term;
    term = gamma * (p_pi * term);
  }
  const double bound = std::pow(gamma, kTerms) * c.lpNorm<Eigen::Infinity>() / (1.0 - gamma);
  // Slack for floating-point accumulation over the partial sum.
  const double rounding = 1e-12 * (1.0 + v.lpNorm<Eigen::Infinity>());
  const double neumann_excess =
      std::max(0.0, (partial - v).lpNorm<Eigen::Infinity>() - bound - rounding);
  const double negativity = std::max(0.0, -v.minCoeff());

  report.max_abs_error = std::max({std::max(0.0, radius - gamma), neumann_excess, negativity});
  report.condition_number = condition_number_2(MatrixXd::Identity(p_pi.rows(), p_pi.cols()) - gamma * p_pi);
  report.finalize();
  return report;
}

PolicyMatrix random_policy(Index n_states, Index n_actions, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<int> coin(0, 3);
  std::uniform_int_distribution<Index> pick(0, n_actions - 1);
  MatrixXd probs = MatrixXd::Zero(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s) {
    if (coin(rng) == 0) {
      probs(s, pick(rng)) = 1.0;
      continue;
    }
    for (Index a = 0; a < n_actions; ++a) probs(s, a) = expo(rng);
    probs.row(s) /= probs.row(s).sum();
  }
  return PolicyMatrix(std::move(probs));
}

VerificationReport check_first_order_optimality(const FiniteMdp& mdp, const PolicyMatrix& pi_star,
                                                std::size_t directions, std::mt19937_64& rng) {
  VerificationReport report = make_report("first_order_optimality", 1e-8);
  const ValueFn v = evaluate_policy(mdp, pi_star);
  const QFn adv = q_from_value(mdp, v).colwise() - v;
  const VectorXd d = adjoint_occupancy(mdp, pi_star);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < directions; ++i) {
    const PolicyMatrix direction = random_policy(mdp.n_states(), mdp.n_actions(), rng);
    // <sigma pi' A, rho> = <pi' A, sigma* rho>.
    worst = std::min(worst, apply_policy(direction, adv).dot(d));
  }
  report.instances_tested = directions;
  report.min_slack = worst;
  report.max_abs_error = std::max(0.0, -worst);
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------

bool SuiteResult::all_passed() const {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
}

KernelMetric random_metric(Index n_states, Index n_actions, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VectorXd embed(n_actions);
  for (Index a = 0; a < n_actions; ++a) embed(a) = unit(rng);
  const double bandwidth = 0.1 + unit(rng);
  MatrixXd r(n_actions, n_actions);
  for (Index i = 0; i < n_actions; ++i) {
    for (Index j = 0; j < n_actions; ++j) {
      const double diff = embed(i) - embed(j);
      r(i, j) = std::exp(-diff * diff / (2.0 * bandwidth * bandwidth));
    }
  }
  r += 0.05 * MatrixXd::Identity(n_actions, n_actions);
  VectorXd w(n_states);
  for (Index s = 0; s < n_states; ++s) w(s) = 1.0 + unit(rng);
  return KernelMetric(std::move(r), std::move(w));
}

namespace {

struct Instance {
  FiniteMdp mdp;
  PolicyMatrix pi;
  PolicyMatrix pi_prime;
};

Instance random_instance(std::uint64_t seed, Index max_states, Index max_actions) {
  std::mt19937_64 rng(seed);
  static constexpr double kGammas[] = {0.5, 0.9, 0.95};
  GarnetSpec spec;
  spec.n_states = std::uniform_int_distribution<Index>(1, max_states)(rng);
  spec.n_actions = std::uniform_int_distribution<Index>(1, max_actions)(rng);
  spec.branching = std::uniform_int_distribution<Index>(1, spec.n_states)(rng);
  spec.gamma = kGammas[std::uniform_int_distribution<int>(0, 2)(rng)];
  spec.seed = rng();
  FiniteMdp mdp = generate_garnet(spec);
  PolicyMatrix pi = random_policy(spec.n_states, spec.n_actions, rng);
  PolicyMatrix pi_prime = random_policy(spec.n_states, spec.n_actions, rng);
  return Instance{std::move(mdp), std::move(pi), std::move(pi_prime)};
}

void record(SuiteResult& suite, std::size_t slot, const VerificationReport& report,
            std::uint64_t seed) {
  suite.reports[slot].absorb(report, seed);
  suite.instances.push_back({report.check_name, seed, report.max_abs_error, report.passed});
}

SuiteResult empty_suite(std::initializer_list<std::pair<const char*, double>> checks) {
  SuiteResult suite;
  for (const auto& [name, tol] : checks) {
    VerificationReport r;
    r.check_name = name;
    r.tolerance = tol;
    suite.reports.push_back(r);
  }
  return suite;
}

}  // namespace

SuiteResult run_identity_suite(std::uint64_t master_seed, std::size_t n_instances) {
  SuiteResult suite = empty_suite({{"perturbation_identity", 1e-8},
                                   {"policy_difference", 1e-8},
                                   {"gateaux_derivative", 1e-8},
                                   {"spectral_stability", 1e-6}});
  const std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
  for (std::size_t i = 0; i < n_instances; ++i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    const Instance inst = random_instance(seed, 50, 10);
    std::mt19937_64 eps_rng(seed ^ 0x5EEDULL);
    const double eps = std::uniform_real_distribution<double>(0.0, 1.0)(eps_rng);
    record(suite, 0, check_perturbation_identity(inst.mdp, inst.pi, inst.pi_prime, eps), seed);
    record(suite, 1, check_policy_difference(inst.mdp, inst.pi, inst.pi_prime), seed);
    record(suite, 2, check_gateaux_derivative(inst.mdp, inst.pi, inst.pi_prime, epsilons), seed);
    record(suite, 3, check_spectral_stability(inst.mdp, inst.pi), seed);
  }
  for (auto& r : suite.reports) r.finalize();
  return suite;
}

SuiteResult run_majorization_suite(std::uint64_t master_seed, std::size_t n_mdps, std::size_t pairs) {
  SuiteResult suite = empty_suite({{"majorization", 1e-8}});
  static constexpr double kGammas[] = {0.5, 0.9, 0.95};
  for (std::size_t i = 0; i < n_mdps; ++i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    std::mt19937_64 rng(seed);
    GarnetSpec spec;
    spec.n_states = 20;
    spec.n_actions = 5;
    spec.branching = std::uniform_int_distribution<Index>(1, 20)(rng);
    spec.gamma = kGammas[i % 3];
    spec.seed = rng();
    const FiniteMdp mdp = generate_garnet(spec);
    const KernelMetric metric = random_metric(spec.n_states, spec.n_actions, rng);
    const double kappa = kappa_p_finite(mdp, metric, KappaOptions{8, 1.5, seed});
    for (std::size_t j = 0; j < pairs; ++j) {
      const PolicyMatrix pi = random_policy(spec.n_states, spec.n_actions, rng);
      const PolicyMatrix pi_prime = random_policy(spec.n_states, spec.n_actions, rng);
      const double beta = majorization_beta(mdp, metric, kappa, pi_prime, q_function(mdp, pi));
      record(suite, 0, check_majorization(mdp, metric, pi, pi_prime, beta), seed);
    }
  }
  suite.reports[0].finalize();
  return suite;
}

// ---------------------------------------------------------------------------
// LQR suite

namespace {

MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

lqr::LqrSystem random_system(std::mt19937_64& rng) {
  lqr::LqrSystem sys;
  sys.a_matrix = gaussian(3, 3, rng, 0.6);
  sys.b_matrix = gaussian(3, 2, rng);
  const MatrixXd g = gaussian(3, 3, rng);
  sys.q_cost = g * g.transpose() + 0.1 * MatrixXd::Identity(3, 3);
  const MatrixXd h = gaussian(2, 2, rng);
  sys.r_cost = h * h.transpose() + MatrixXd::Identity(2, 2);
  sys.gamma = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  return sys;
}

/// Discounted Riccati recursion; returns the gain of its fixed point.
lqr::LinearPolicy riccati_gain(const lqr::LqrSystem& sys) {
  const MatrixXd a = std::sqrt(sys.gamma) * sys.a_matrix;
  const MatrixXd b = std::sqrt(sys.gamma) * sys.b_matrix;
  MatrixXd p = sys.q_cost;
  MatrixXd k = MatrixXd::Zero(sys.n_inputs(), sys.n_states());
  for (int it = 0; it < 100000; ++it) {
    k = (sys.r_cost + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    MatrixXd next = sys.q_cost + a.transpose() * p * (a - b * k);
    next = 0.5 * (next + next.transpose());
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (change <= 1e-14 * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
  }
  return lqr::LinearPolicy{(sys.r_cost + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a)};
}

}  // namespace

SuiteResult run_lqr_suite(std::uint64_t master_seed, std::size_t n_systems) {
  SuiteResult suite = empty_suite({{"lqr_scalar_lyapunov", 1e-10},
                                   {"lqr_lyapunov_residual", 1e-8},
                                   {"lqr_riccati_stability", 0.0},
                                   {"lqr_kappa_domination", 0.0},
                                   {"lqr_completing_square", 1e-6},
                                   {"lqr_stationarity", 1e-8}});
  {
    lqr::LqrSystem scalar{MatrixXd::Constant(1, 1, 0.5), MatrixXd::Zero(1, 1),
                          MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 1.0), 1.0};
    const MatrixXd v = lqr::evaluate_linear_policy(scalar, lqr::LinearPolicy{MatrixXd::Zero(1, 1)});
    VerificationReport r = make_report("lqr_scalar_lyapunov", 1e-10);
    r.max_abs_error = std::abs(v(0, 0) - 4.0 / 3.0);
    r.finalize();
    record(suite, 0, r, master_seed);
  }

  for (std::size_t i = 0; i < n_systems; ++i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    std::mt19937_64 rng(seed);
    const lqr::LqrSystem sys = random_system(rng);

    const lqr::LinearPolicy gain = riccati_gain(sys);
    VerificationReport stable = make_report("lqr_riccati_stability", 0.0);
    const double radius = lqr::closed_loop_spectral_radius(sys, gain);
    stable.max_abs_error = radius < 1.0 ? 0.0 : radius;
    stable.finalize();
    record(suite, 2, stable, seed);

    VerificationReport lyap = make_report("lqr_lyapunov_residual", 1e-8);
    if (radius < 1.0) {
      const MatrixXd v = lqr::evaluate_linear_policy(sys, gain);
      const MatrixXd loop = sys.a_matrix - sys.b_matrix * gain.k_gain;
      const MatrixXd residual = v - (sys.q_cost + gain.k_gain.transpose() * sys.r_cost * gain.k_gain) -
                                sys.gamma * loop.transpose() * v * loop;
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(v, Eigen::EigenvaluesOnly);
      lyap.max_abs_error = std::max(max_abs(residual), std::max(0.0, -eig.eigenvalues().minCoeff()));
    } else {
      lyap.max_abs_error = std::numeric_limits<double>::infinity();
    }
    lyap.finalize();
    record(suite, 1, lyap, seed);

    // Randomized lower bound on sup (As+Ba)'Q(As+Ba) / (1 + |s|^2 + |a|^2), ||Q||_2 = 1.
    const double kappa = lqr::lqr_kappa_p(sys);
    std::vector<MatrixXd> q_pool;
    for (int j = 0; j < 1000; ++j) {
      const MatrixXd g = gaussian(3, 3, rng);
      MatrixXd q = g * g.transpose();
      q /= Eigen::SelfAdjointEigenSolver<MatrixXd>(q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
      q_pool.push_back(std::move(q));
    }
    std::uniform_real_distribution<double> log_scale(std::log(0.1), std::log(100.0));
    double best_ratio = 0.0;
    for (int j = 0; j < 10000; ++j) {
      const VectorXd s = gaussian(3, 1, rng, std::exp(log_scale(rng)));
      const VectorXd a = gaussian(2, 1, rng, std::exp(log_scale(rng)));
      const VectorXd y = sys.a_matrix * s + sys.b_matrix * a;
      best_ratio = std::max(best_ratio, y.dot(q_pool[std::size_t(j) % q_pool.size()] * y) /
                                            (1.0 + s.squaredNorm() + a.squaredNorm()));
    }
    VerificationReport dom = make_report("lqr_kappa_domination", 0.0);
    dom.instances_tested = 10000;
    dom.min_slack = kappa - best_ratio;
    dom.max_abs_error = std::max(0.0, best_ratio - kappa);
    dom.finalize();
    record(suite, 3, dom, seed);

    // Completing the square against a gradient-descent oracle.
    const MatrixXd g = gaussian(3, 3, rng);
    const MatrixXd q_matrix = g * g.transpose();
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const lqr::LinearPolicy k = lqr::completing_square_minimizer(sys, q_matrix, lambda);
    const MatrixXd cross = lambda * sys.b_matrix.transpose() * q_matrix * sys.a_matrix;
    const double step = 0.5 / Eigen::SelfAdjointEigenSolver<MatrixXd>(sys.r_cost, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .maxCoeff();
    VerificationReport square = make_report("lqr_completing_square", 1e-6);
    VerificationReport stationary = make_report("lqr_stationarity", 1e-8);
    for (int j = 0; j < 100; ++j) {
      const VectorXd s = gaussian(3, 1, rng);
      const VectorXd a_star = -k.k_gain * s;
      VectorXd a = VectorXd::Zero(2);
      for (int it = 0; it < 200000; ++it) {
        const VectorXd grad = 2.0 * sys.r_cost * a + 2.0 * cross * s;
        if (grad.norm() <= 1e-12) break;
        a -= step * grad;
      }
      square.max_abs_error = std::max(square.max_abs_error, (a - a_star).lpNorm<Eigen::Infinity>());
      const VectorXd grad_star = 2.0 * sys.r_cost * a_star + 2.0 * cross * s;
      stationary.max_abs_error = std::max(stationary.max_abs_error, grad_star.norm());
    }
    square.instances_tested = stationary.instances_tested = 100;
    square.finalize();
    stationary.finalize();
    record(suite, 4, square, seed);
    record(suite, 5, stationary, seed);
  }
  for (auto& r : suite.reports) r.finalize();
  return suite;
}

std::string instances_to_csv(const std::vector<InstanceResult>& rows) {
  std::string out = "check_name,seed,max_abs_error,passed\n";
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, ",%llu,%.17g,%d\n", static_cast<unsigned long long>(row.seed),
                  row.max_abs_error, row.passed ? 1 : 0);
    out += row.check_name;
    out += buf;
  }
  return out;
}

std::string format_report(const VerificationReport& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS " : "FAIL ") << r.check_name << " instances=" << r.instances_tested
     << " max_abs_error=" << r.max_abs_error << " tol=" << r.tolerance << " worst_seed=" << r.worst_seed;
  if (!std::isnan(r.condition_number)) os << " cond=" << r.condition_number;
  if (!std::isnan(r.slope)) os << " slope=" << r.slope;
  if (!std::isnan(r.min_slack)) os << " min_slack=" << r.min_slack;
  return os.str();
}

}  // namespace opmdp
