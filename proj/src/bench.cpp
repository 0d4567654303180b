#include "opmdp/bench.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "opmdp/errors.hpp"
#include "opmdp/mdp_io.hpp"

namespace opmdp {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  require(doc.is_object(), where + " must be a JSON object");
  for (const auto& item : doc.items()) {
    require(allowed.count(item.key()) == 1, "unknown field '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_field(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("field '") + key + "': " + e.what());
  }
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

json solver_config_to_json(const SolverConfig& c) {
  return json{{"max_iters", c.max_iters},
              {"tol", c.tol},
              {"beta_mode", to_string(c.beta_mode)},
              {"eta0", c.eta0},
              {"inner_iters", c.inner_iters},
              {"ppo_epsilon", c.ppo_epsilon},
              {"ppo_lr", c.ppo_lr},
              {"ppo_inner_iters", c.ppo_inner_iters},
              {"exponent_clip", c.exponent_clip},
              {"trpo_radius0", c.trpo_radius0},
              {"seed", c.seed},
              {"keep_policies", c.keep_policies}};
}

SolverConfig solver_config_from_json(const json& doc) {
  reject_unknown_keys(doc,
                      {"max_iters", "tol", "beta_mode", "eta0", "inner_iters", "ppo_epsilon", "ppo_lr",
                       "ppo_inner_iters", "exponent_clip", "trpo_radius0", "seed", "keep_policies"},
                      "solver config");
  SolverConfig c;
  read_field(doc, "max_iters", c.max_iters);
  read_field(doc, "tol", c.tol);
  if (doc.contains("beta_mode")) c.beta_mode = beta_mode_from_string(doc.at("beta_mode").get<std::string>());
  read_field(doc, "eta0", c.eta0);
  read_field(doc, "inner_iters", c.inner_iters);
  read_field(doc, "ppo_epsilon", c.ppo_epsilon);
  read_field(doc, "ppo_lr", c.ppo_lr);
  read_field(doc, "ppo_inner_iters", c.ppo_inner_iters);
  read_field(doc, "exponent_clip", c.exponent_clip);
  read_field(doc, "trpo_radius0", c.trpo_radius0);
  read_field(doc, "seed", c.seed);
  read_field(doc, "keep_policies", c.keep_policies);
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  garnet.validate();
  require(n_seeds >= 1, "n_seeds must be at least 1");
  require(!solvers.empty(), "at least one solver is required");
  const auto& known = solver_names();
  for (const auto& entry : solvers) {
    require(std::find(known.begin(), known.end(), entry.name) != known.end(),
            "unknown solver '" + entry.name + "'");
    entry.config.validate();
  }
  if (sample_based) require(episodes >= 1 && steps_per_episode >= 1, "sampling needs episodes and steps");
}

ExperimentConfig experiment_config_from_json(const json& doc) {
  reject_unknown_keys(doc,
                      {"garnet", "solvers", "n_seeds", "sample_based", "output_dir", "episodes",
                       "steps_per_episode", "record_wall_time"},
                      "experiment config");
  ExperimentConfig config;
  if (doc.contains("garnet")) {
    const json& g = doc.at("garnet");
    reject_unknown_keys(g, {"n_states", "n_actions", "branching", "gamma", "cost_range", "seed"}, "garnet");
    read_field(g, "n_states", config.garnet.n_states);
    read_field(g, "n_actions", config.garnet.n_actions);
    read_field(g, "branching", config.garnet.branching);
    read_field(g, "gamma", config.garnet.gamma);
    read_field(g, "seed", config.garnet.seed);
    if (g.contains("cost_range")) {
      const auto range = g.at("cost_range").get<std::vector<double>>();
      require(range.size() == 2, "cost_range must be [low, high]");
      config.garnet.cost_low = range[0];
      config.garnet.cost_high = range[1];
    }
  }
  require(doc.contains("solvers") && doc.at("solvers").is_array(), "solvers must be an array");
  for (const json& item : doc.at("solvers")) {
    SolverEntry entry;
    if (item.is_string()) {
      entry.name = item.get<std::string>();
    } else {
      reject_unknown_keys(item, {"name", "config"}, "solver entry");
      require(item.contains("name"), "solver entry needs a name");
      entry.name = item.at("name").get<std::string>();
      if (item.contains("config")) entry.config = solver_config_from_json(item.at("config"));
    }
    config.solvers.push_back(std::move(entry));
  }
  read_field(doc, "n_seeds", config.n_seeds);
  read_field(doc, "sample_based", config.sample_based);
  read_field(doc, "output_dir", config.output_dir);
  read_field(doc, "episodes", config.episodes);
  read_field(doc, "steps_per_episode", config.steps_per_episode);
  read_field(doc, "record_wall_time", config.record_wall_time);
  config.validate();
  return config;
}

json experiment_config_to_json(const ExperimentConfig& config) {
  json solvers = json::array();
  for (const auto& entry : config.solvers) {
    solvers.push_back({{"name", entry.name}, {"config", solver_config_to_json(entry.config)}});
  }
  return json{{"garnet",
               {{"n_states", config.garnet.n_states},
                {"n_actions", config.garnet.n_actions},
                {"branching", config.garnet.branching},
                {"gamma", config.garnet.gamma},
                {"cost_range", {config.garnet.cost_low, config.garnet.cost_high}},
                {"seed", config.garnet.seed}}},
              {"solvers", solvers},
              {"n_seeds", config.n_seeds},
              {"sample_based", config.sample_based},
              {"output_dir", config.output_dir},
              {"episodes", config.episodes},
              {"steps_per_episode", config.steps_per_episode},
              {"record_wall_time", config.record_wall_time}};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path));
}

std::uint64_t run_seed(const ExperimentConfig& config, std::size_t index) {
  return config.garnet.seed + index;
}

BenchResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& incremental_csv) {
  config.validate();
  BenchResult result;
  std::ofstream partial;
  if (!incremental_csv.empty()) {
    if (incremental_csv.has_parent_path()) std::filesystem::create_directories(incremental_csv.parent_path());
    partial.open(incremental_csv, std::ios::binary | std::ios::trunc);
    require(bool(partial), "cannot open " + incremental_csv.string() + " for writing");
    partial << bench_csv({});
    partial.flush();
  }

  for (std::size_t i = 0; i < config.n_seeds; ++i) {
    GarnetSpec spec = config.garnet;
    spec.seed = run_seed(config, i);
    const FiniteMdp mdp = generate_garnet(spec);
    const KernelMetric metric = KernelMetric::identity(mdp.n_states(), mdp.n_actions());

    for (std::size_t j = 0; j < config.solvers.size(); ++j) {
      const SolverEntry& entry = config.solvers[j];
      SolverConfig solver_config = entry.config;
      solver_config.keep_policies = true;
      const std::uint64_t stream = derive_seed(derive_seed(spec.seed, j), entry.config.seed);
      solver_config.seed = stream;

      ExactAdvantage exact;
      MonteCarloAdvantage sampled(config.episodes, config.steps_per_episode, stream);
      AdvantageSource& source = config.sample_based ? static_cast<AdvantageSource&>(sampled) : exact;
      const SolveResult solved = solve(entry.name, mdp, metric, solver_config, source);
      if (!solved.converged) {
        result.not_converged.push_back(entry.name + " seed=" + std::to_string(spec.seed));
      }

      std::vector<BenchRow> rows;
      for (const RunRecord& record : solved.history) {
        BenchRow row;
        row.solver = entry.name;
        row.seed = spec.seed;
        row.iteration = record.iteration;
        // Ground truth: every reported objective is an exact evaluation of pi_k.
        row.objective = objective(mdp, *record.policy_snapshot);
        row.log_objective = std::log(row.objective);
        row.wall_ms = config.record_wall_time ? record.wall_ms : 0.0;
        row.samples_consumed = record.samples_consumed;
        rows.push_back(std::move(row));
      }
      if (partial.is_open()) {
        const std::string text = bench_csv(rows);
        partial << text.substr(text.find('\n') + 1);
        partial.flush();
        require(bool(partial), "write to " + incremental_csv.string() + " failed");
      }
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
  }
  return result;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "solver,seed,iteration,objective,log_objective,wall_ms,samples_consumed\n";
  for (const auto& r : rows) {
    out += r.solver + ',' + std::to_string(r.seed) + ',' + std::to_string(r.iteration) + ',' +
           format_double(r.objective) + ',' + format_double(r.log_objective) + ',' +
           format_double(r.wall_ms) + ',' + std::to_string(r.samples_consumed) + '\n';
  }
  return out;
}

std::vector<BenchRow> parse_bench_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(bool(std::getline(in, line)) &&
              line == "solver,seed,iteration,objective,log_objective,wall_ms,samples_consumed",
          "bench CSV header mismatch");
  std::vector<BenchRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    require(cells.size() == 7, "bench CSV line " + std::to_string(line_no) + " needs 7 fields");
    try {
      BenchRow row;
      row.solver = cells[0];
      row.seed = std::stoull(cells[1]);
      row.iteration = std::stoull(cells[2]);
      row.objective = std::strtod(cells[3].c_str(), nullptr);
      row.log_objective = std::strtod(cells[4].c_str(), nullptr);
      row.wall_ms = std::strtod(cells[5].c_str(), nullptr);
      row.samples_consumed = std::stoull(cells[6]);
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw ContractViolation("bench CSV line " + std::to_string(line_no) + " is malformed");
    }
  }
  return rows;
}

std::string plotdata_csv(const BenchResult& result) {
  require(!result.rows.empty(), "bench result is empty");
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> series;
  for (const auto& row : result.rows) {
    if (series.find(row.solver) == series.end()) order.push_back(row.solver);
    series[row.solver][row.iteration].push_back(row.objective);
  }
  std::string out = "solver,iteration,n_seeds,mean_objective,min_objective,max_objective\n";
  for (const auto& solver : order) {
    for (const auto& [iteration, values] : series[solver]) {
      double sum = 0.0;
      for (double v : values) sum += v;
      out += solver + ',' + std::to_string(iteration) + ',' + std::to_string(values.size()) + ',' +
             format_double(sum / double(values.size())) + ',' +
             format_double(*std::min_element(values.begin(), values.end())) + ',' +
             format_double(*std::max_element(values.begin(), values.end())) + '\n';
    }
  }
  return out;
}

void emit_csv(const BenchResult& result, const std::filesystem::path& path) {
  require(!result.rows.empty(), "bench result is empty");
  write_text_file(path, bench_csv(result.rows));
}

void emit_plotdata(const BenchResult& result, const std::filesystem::path& path) {
  write_text_file(path, plotdata_csv(result));
}

void write_bench_outputs(const ExperimentConfig& config, const BenchResult& result) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  emit_csv(result, dir / "bench.csv");
  for (const auto& entry : config.solvers) {
    BenchResult subset;
    for (const auto& row : result.rows) {
      if (row.solver == entry.name) subset.rows.push_back(row);
    }
    if (!subset.rows.empty()) emit_csv(subset, dir / ("bench_" + entry.name + ".csv"));
  }
  emit_plotdata(result, dir / "plotdata.csv");
}

}  // namespace opmdp
