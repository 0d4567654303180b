// opmdp: generate GARNET MDPs, run solvers and benchmarks, run the verification suites.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "opmdp/bench.hpp"
#include "opmdp/errors.hpp"
#include "opmdp/garnet.hpp"
#include "opmdp/mdp_io.hpp"
#include "opmdp/solvers.hpp"
#include "opmdp/verify.hpp"

namespace fs = std::filesystem;
using namespace opmdp;

namespace {

GarnetSpec garnet_from_file(const std::string& path) {
  const nlohmann::json doc = read_json_file(path);
  // Either a full experiment config or a bare garnet object.
  if (doc.contains("solvers")) return experiment_config_from_json(doc).garnet;
  nlohmann::json wrapped{{"garnet", doc}, {"solvers", nlohmann::json::array({"value_iteration"})}};
  return experiment_config_from_json(wrapped).garnet;
}

int run_gen(const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
            const std::string& out) {
  GarnetSpec spec = config ? garnet_from_file(*config) : GarnetSpec{};
  if (seed) spec.seed = *seed;
  fs::create_directories(out);
  const fs::path path = fs::path(out) / "mdp.json";
  save_mdp(generate_garnet(spec), path);
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int run_solve(const std::string& mdp_path, const std::string& solver,
              const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
              bool sample_based, std::size_t episodes, std::size_t steps, const std::string& out) {
  const FiniteMdp mdp = load_mdp(mdp_path);
  SolverConfig solver_config = config ? solver_config_from_json(read_json_file(*config)) : SolverConfig{};
  if (seed) solver_config.seed = *seed;
  const KernelMetric metric = KernelMetric::identity(mdp.n_states(), mdp.n_actions());
  ExactAdvantage exact;
  MonteCarloAdvantage sampled(episodes, steps, solver_config.seed);
  AdvantageSource& source = sample_based ? static_cast<AdvantageSource&>(sampled) : exact;
  const SolveResult result = solve(solver, mdp, metric, solver_config, source);

  fs::create_directories(out);
  save_policy(result.policy, fs::path(out) / "policy.json");
  write_text_file(fs::path(out) / "history.csv", history_to_csv(result.history));
  std::printf("solver=%s iterations=%zu converged=%s objective=%.17g samples=%llu\n", solver.c_str(),
              result.history.size(), result.converged ? "yes" : "no", result.final_objective,
              static_cast<unsigned long long>(result.samples_consumed));
  return 0;
}

int run_bench(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::optional<std::string>& out, bool sample_based) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (seed) config.garnet.seed = *seed;
  if (out) config.output_dir = *out;
  if (sample_based) config.sample_based = true;
  const BenchResult result = run_experiment(config, fs::path(config.output_dir) / "bench.csv");
  write_bench_outputs(config, result);
  for (const auto& note : result.not_converged) std::cout << "not converged: " << note << "\n";
  std::cout << "wrote " << result.rows.size() << " rows to " << config.output_dir << "\n";
  return 0;
}

int run_verify(const std::string& suite, std::uint64_t seed, const std::optional<std::string>& out) {
  std::vector<SuiteResult> results;
  if (suite == "all" || suite == "identity") results.push_back(run_identity_suite(seed, 1000));
  if (suite == "all" || suite == "majorization") results.push_back(run_majorization_suite(seed, 20, 100));
  if (suite == "all" || suite == "lqr") results.push_back(run_lqr_suite(seed, 20));

  bool ok = true;
  std::vector<InstanceResult> rows;
  for (const auto& r : results) {
    for (const auto& report : r.reports) std::cout << format_report(report) << "\n";
    rows.insert(rows.end(), r.instances.begin(), r.instances.end());
    ok = ok && r.all_passed();
  }
  if (out) {
    fs::create_directories(*out);
    write_text_file(fs::path(*out) / "verify.csv", instances_to_csv(rows));
  }
  std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular policy optimization: GARNET generation, solvers, benchmark and verification"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::string solver = "mm_rkhs";
  bool sample_based = false;

  auto* gen = app.add_subcommand("gen", "Generate a GARNET MDP file (<out>/mdp.json)");
  gen->add_option("--seed", seed, "GARNET seed");
  gen->add_option("--config", config, "JSON garnet spec or experiment config")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "output directory (default .)");

  std::string mdp_path;
  std::size_t episodes = 5;
  std::size_t steps = 50000;
  auto* solve_cmd = app.add_subcommand("solve", "Solve an MDP file; writes policy.json and history.csv");
  solve_cmd->add_option("mdp", mdp_path, "MDP JSON file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--solver", solver, "solver name")->check(CLI::IsMember(solver_names()));
  solve_cmd->add_option("--config", config, "JSON solver config")->check(CLI::ExistingFile);
  solve_cmd->add_option("--seed", seed, "seed of the sampling stream");
  solve_cmd->add_flag("--sample-based", sample_based, "use Monte Carlo advantage estimates");
  solve_cmd->add_option("--episodes", episodes, "episodes per estimate (sample-based)");
  solve_cmd->add_option("--steps", steps, "steps per episode (sample-based)");
  solve_cmd->add_option("--out", out, "output directory (default .)");

  auto* bench = app.add_subcommand("bench", "Run an experiment config; writes CSV and plot data");
  bench->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  bench->add_option("--seed", seed, "master GARNET seed (overrides the config)");
  bench->add_option("--out", out, "output directory (overrides output_dir)");
  bench->add_flag("--sample-based", sample_based, "force Monte Carlo advantage estimates");

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "Run the verification suites; exit 0 iff all pass");
  verify->add_option("suite", suite, "all, identity, majorization or lqr")
      ->check(CLI::IsMember({"all", "identity", "majorization", "lqr"}));
  verify->add_option("--seed", seed, "master seed (default 0)");
  verify->add_option("--out", out, "directory for verify.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) return run_gen(config, seed, out.value_or("."));
    if (*solve_cmd) {
      return run_solve(mdp_path, solver, config, seed, sample_based, episodes, steps, out.value_or("."));
    }
    if (*bench) return run_bench(*config, seed, out, sample_based);
    if (*verify) return run_verify(suite, seed.value_or(0), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
