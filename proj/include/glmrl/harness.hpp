#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glmrl/agent.hpp"
#include "glmrl/diagnostics.hpp"
#include "glmrl/mdp.hpp"

namespace glmrl {

using ConfigMap = std::map<std::string, std::string>;

struct EnvConfig {
  /// "tabular" | "linear" | "counterexample" | "chain"
  std::string family = "tabular";
  int states = 3;
  int actions = 2;
  int horizon = 3;
  /// Feature dimension of the linear family.
  int dim = 4;
  /// Bonus cap used by the counterexample construction.
  double cx_gamma = 1.0;
  std::uint64_t env_seed = 0;
  bool stochastic_rewards = false;
};

struct ExperimentConfig {
  EnvConfig env;
  std::string link = "identity";
  bool identity_unit_curvature = false;
  int episodes = 100;
  double gamma_scale = 1.0;
  std::optional<double> gamma_cap;
  /// Parameter-ball radius; nullopt means sqrt(d).
  std::optional<double> ball_radius = 1.0;
  SolverOpts solver;
  int epoch_length = 1;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> baselines;
  double epsilon = 0.1;
  std::filesystem::path out_dir = "run_out";
  /// Worker threads for the seed pool; 0 keeps the OpenMP default.
  int threads = 0;
};

/// Recognised configuration keys, in the order they are written out.
const std::vector<std::string>& config_keys();

/// key = value lines; '#' starts a comment. Throws ConfigError on malformed lines.
ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::filesystem::path& path);

/// Applies `overrides` on top of defaults; unknown keys and bad values throw ConfigError.
ExperimentConfig make_config(const ConfigMap& values);

/// Resolved config as key = value text (round-trips through make_config).
std::string format_config(const ExperimentConfig& config);

/// "3", "1,4,9" or "0..9" (inclusive).
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

std::shared_ptr<EpisodicMdp> build_environment(const EnvConfig& env);
AgentConfig build_agent_config(const ExperimentConfig& config, int feature_dim);

/// One (agent, seed) run.
struct SeedRun {
  AgentKind kind = AgentKind::kLsviUcb;
  std::uint64_t seed = 0;
  RunResult result;
};

struct ExperimentResults {
  ExperimentConfig config;
  int feature_dim = 0;
  std::optional<double> v_star;
  /// Grouped by agent (LSVI-UCB first, then baselines in config order), seeds in config order.
  std::vector<SeedRun> runs;
  std::optional<double> closure_residual;
};

/// Runs every (agent, seed) pair on a worker pool. Results do not depend on
/// the number of threads.
ExperimentResults execute_experiment(const ExperimentConfig& config);

/// Per-seed CSV: episode,reward,cumulative_regret,gamma,bonus_sum,solver_converged.
void write_seed_csv(std::ostream& out, const RunResult& run);

struct SeedCsvRow {
  int episode = 0;
  double reward = 0.0;
  double cumulative_regret = 0.0;
  double gamma = 0.0;
  double bonus_sum = 0.0;
  bool solver_converged = true;
};
std::vector<SeedCsvRow> read_seed_csv(std::istream& in);

/// Per-step trace used by `diagnose`.
void write_trace_csv(std::ostream& out, const std::vector<EpisodeRecord>& trace);
std::vector<EpisodeRecord> read_trace_csv(std::istream& in);

struct AggregateSeries {
  std::string name;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct AggregateTable {
  std::vector<int> episodes;
  std::vector<AggregateSeries> series;
};

/// Mean and sample standard deviation of cumulative regret across seeds, per agent.
AggregateTable aggregate(const ExperimentResults& results);
void write_aggregate_csv(std::ostream& out, const AggregateTable& table);
/// Throws ParseError naming the offending line.
AggregateTable read_aggregate_csv(std::istream& in);

struct ComparisonRow {
  std::string agent;
  double final_regret_mean = 0.0;
  double final_regret_std = 0.0;
  int seeds = 0;
};

std::vector<ComparisonRow> comparison_table(const ExperimentResults& results);

/// Runs LSVI-UCB and the configured baselines; ConfigError if none is named.
std::vector<ComparisonRow> compare_baselines(const ExperimentConfig& config);

/// Writes per-seed CSVs, traces, aggregate.csv, comparison.csv,
/// metadata.json, diagnostics.json, config.txt and regret.svg under
/// config.out_dir. The directory is checked for writability first (IoError).
ExperimentResults run_experiment(const ExperimentConfig& config);

struct PlotBounds {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

/// Data bounds (mean +- std for y) padded by 5% of the span on each side.
PlotBounds plot_bounds(const AggregateTable& table);

/// Line chart with one polyline and one shaded +-1 std band per series.
std::string render_svg(const AggregateTable& table);

/// Reads an aggregate CSV and writes the SVG chart.
void emit_plot(const std::filesystem::path& aggregate_csv, const std::filesystem::path& svg_out);

/// Rebuilds the diagnostics of every LSVI-UCB trace in a run directory and
/// rewrites diagnostics.json. Returns the JSON text.
std::string diagnose_run(const std::filesystem::path& run_dir);

}  // namespace glmrl
