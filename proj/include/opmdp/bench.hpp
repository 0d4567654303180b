#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "opmdp/garnet.hpp"
#include "opmdp/solvers.hpp"

namespace opmdp {

struct SolverEntry {
  std::string name;
  SolverConfig config;
};

struct ExperimentConfig {
  GarnetSpec garnet;
  std::vector<SolverEntry> solvers;
  std::size_t n_seeds = 1;
  bool sample_based = false;
  std::string output_dir = "bench_out";
  std::size_t episodes = 5;
  std::size_t steps_per_episode = 50000;
  /// When false, wall_ms is written as 0 so output files are byte-deterministic.
  bool record_wall_time = false;

  void validate() const;
};

/// Field names mirror the struct members; "garnet" and each solver "config" are
/// nested objects and every field is optional except solver names.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::json solver_config_to_json(const SolverConfig& config);
SolverConfig solver_config_from_json(const nlohmann::json& doc);

struct BenchRow {
  std::string solver;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  double objective = 0.0;
  double log_objective = 0.0;
  double wall_ms = 0.0;
  std::uint64_t samples_consumed = 0;

  bool operator==(const BenchRow&) const = default;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  /// "solver seed=<n>" for every run whose solver reported non-convergence.
  std::vector<std::string> not_converged;

  bool operator==(const BenchResult& other) const { return rows == other.rows; }
};

/// GARNET seed of run i: garnet.seed + i.
std::uint64_t run_seed(const ExperimentConfig& config, std::size_t index);

/**
 * For each seed, generates the GARNET and runs every configured solver. Each
 * policy pi_k is re-scored with exact evaluation. Sample-based runs use an
 * independent RNG stream per (seed, solver). When `incremental_csv` is given,
 * rows are appended to it after each solver so partial results survive a crash.
 */
BenchResult run_experiment(const ExperimentConfig& config,
                           const std::filesystem::path& incremental_csv = {});

/// Header solver,seed,iteration,objective,log_objective,wall_ms,samples_consumed; %.17g reals.
std::string bench_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_bench_csv(const std::string& text);

/// One series per solver: iteration, mean, min, max of the objective over seeds.
std::string plotdata_csv(const BenchResult& result);

void emit_csv(const BenchResult& result, const std::filesystem::path& path);
void emit_plotdata(const BenchResult& result, const std::filesystem::path& path);

/// Writes bench.csv, bench_<solver>.csv per solver and plotdata.csv under config.output_dir.
void write_bench_outputs(const ExperimentConfig& config, const BenchResult& result);

}  // namespace opmdp
