#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "glmrl/environments.hpp"
#include "glmrl/error.hpp"
#include "glmrl/harness.hpp"

namespace glmrl {

namespace {

using nlohmann::json;

constexpr int kClosureFunctions = 100;
constexpr int kClosureGrid = 101;
constexpr std::uint64_t kClosureStream = 0xC105E;

std::string seed_file(const std::string& prefix, AgentKind kind, std::uint64_t seed) {
  return prefix + agent_name(kind) + "_seed" + std::to_string(seed) + ".csv";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  write_text(path, buf.str());
}

json config_json(const ExperimentConfig& config) {
  json out = json::object();
  for (const auto& [k, v] : parse_config_text(format_config(config))) out[k] = v;
  return out;
}

json report_json(const DiagnosticsReport& r, AgentKind kind, std::uint64_t seed) {
  json j;
  j["agent"] = agent_name(kind);
  j["seed"] = seed;
  if (r.optimism_available) {
    j["optimism_checks"] = r.optimism_checks;
    j["optimism_violations"] = r.optimism_violations;
    j["max_violation_magnitude"] = r.max_violation_magnitude;
  } else {
    j["optimism_checks"] = nullptr;
    j["optimism_notice"] = "environment has no oracle; optimism check skipped";
  }
  j["potential_sums"] = r.potential_sums;
  j["potential_bound"] = r.potential_bound;
  if (r.decomposition) {
    j["decomposition_gap"] = {{"mean", r.decomposition->mean},
                              {"std_error", r.decomposition->std_error},
                              {"samples", r.decomposition->samples}};
  } else {
    j["decomposition_gap"] = nullptr;
  }
  return j;
}

struct DiagnosticsInput {
  AgentKind kind;
  std::uint64_t seed;
  const std::vector<EpisodeRecord>* trace;
};

/// Builds the diagnostics document; rethrows InvariantBreach after filling in `doc`.
json build_diagnostics(const std::vector<DiagnosticsInput>& inputs, int dim,
                       std::optional<double> v_star, std::optional<double> closure,
                       std::string* breach) {
  json doc;
  doc["runs"] = json::array();
  for (const auto& in : inputs) {
    try {
      doc["runs"].push_back(report_json(diagnose_trace(*in.trace, dim, v_star), in.kind, in.seed));
    } catch (const InvariantBreach& e) {
      doc["runs"].push_back({{"agent", agent_name(in.kind)}, {"seed", in.seed}, {"error", e.what()}});
      if (breach && breach->empty()) *breach = e.what();
    }
  }
  doc["closure_max_residual"] = closure ? json(*closure) : json(nullptr);
  return doc;
}

std::optional<double> counterexample_closure(const EpisodicMdp& env, const EnvConfig& cfg) {
  const auto* cx = dynamic_cast<const CounterexampleMdp*>(&env);
  if (!cx) return std::nullopt;
  Rng rng = Rng(cfg.env_seed).child(kClosureStream);
  return closure_residual(*cx, kClosureFunctions, kClosureGrid, rng);
}

}  // namespace

ExperimentResults execute_experiment(const ExperimentConfig& config) {
  ExperimentResults results;
  results.config = config;
  const auto env = build_environment(config.env);
  results.feature_dim = env->feature_dim();
  const AgentConfig agent_cfg = build_agent_config(config, results.feature_dim);

  std::vector<AgentKind> kinds{AgentKind::kLsviUcb};
  for (const auto& b : config.baselines) kinds.push_back(agent_kind_by_name(b));

  const int jobs = static_cast<int>(kinds.size() * config.seeds.size());
  results.runs.resize(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  int threads = config.threads;
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#else
  threads = 1;
#endif

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int j = 0; j < jobs; ++j) {
    const AgentKind kind = kinds[j / config.seeds.size()];
    const std::uint64_t seed = config.seeds[j % config.seeds.size()];
    try {
      results.runs[j] = {kind, seed, run_agent(*env, kind, config.episodes, agent_cfg, seed)};
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  results.v_star = results.runs.front().result.log.v_star();
  results.closure_residual = counterexample_closure(*env, config.env);
  return results;
}

AggregateTable aggregate(const ExperimentResults& results) {
  AggregateTable table;
  const int episodes = results.config.episodes;
  for (int t = 1; t <= episodes; ++t) table.episodes.push_back(t);
  std::vector<AgentKind> order;
  for (const auto& run : results.runs) {
    if (std::find(order.begin(), order.end(), run.kind) == order.end()) order.push_back(run.kind);
  }
  for (const AgentKind kind : order) {
    AggregateSeries series{agent_name(kind), std::vector<double>(episodes, 0.0),
                           std::vector<double>(episodes, 0.0)};
    std::vector<const RegretLog*> logs;
    for (const auto& run : results.runs) {
      if (run.kind == kind) logs.push_back(&run.result.log);
    }
    const double n = static_cast<double>(logs.size());
    for (int t = 0; t < episodes; ++t) {
      double sum = 0.0;
      for (const auto* log : logs) {
        sum += log->cumulative_regret().empty() ? std::nan("") : log->cumulative_regret()[t];
      }
      const double mean = sum / n;
      double var = 0.0;
      for (const auto* log : logs) {
        const double v = log->cumulative_regret().empty() ? std::nan("") : log->cumulative_regret()[t];
        var += (v - mean) * (v - mean);
      }
      series.mean[t] = mean;
      series.stddev[t] = logs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    }
    table.series.push_back(std::move(series));
  }
  return table;
}

std::vector<ComparisonRow> comparison_table(const ExperimentResults& results) {
  const AggregateTable table = aggregate(results);
  std::vector<ComparisonRow> rows;
  for (const auto& s : table.series) {
    int seeds = 0;
    for (const auto& run : results.runs) seeds += agent_name(run.kind) == s.name;
    rows.push_back({s.name, s.mean.back(), s.stddev.back(), seeds});
  }
  return rows;
}

std::vector<ComparisonRow> compare_baselines(const ExperimentConfig& config) {
  if (config.baselines.empty()) throw ConfigError("compare_baselines needs at least one baseline");
  return comparison_table(execute_experiment(config));
}

ExperimentResults run_experiment(const ExperimentConfig& config) {
  const auto& dir = config.out_dir;
  try {
    std::filesystem::create_directories(dir);
    const auto probe = dir / ".write_probe";
    write_text(probe, "");
    std::filesystem::remove(probe);
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError("output directory " + dir.string() + " is not writable: " + e.what());
  }

  ExperimentResults results = execute_experiment(config);

  write_text(dir / "config.txt", format_config(config));
  std::vector<DiagnosticsInput> diag_inputs;
  json meta;
  meta["config"] = config_json(config);
  meta["feature_dim"] = results.feature_dim;
  meta["v_star"] = results.v_star ? json(*results.v_star) : json(nullptr);
  meta["runs"] = json::array();
  for (const auto& run : results.runs) {
    write_file(dir / seed_file("", run.kind, run.seed),
               [&](std::ostream& out) { write_seed_csv(out, run.result); });
    const RunMetadata& m = run.result.metadata;
    meta["runs"].push_back({{"agent", m.agent},
                            {"seed", m.seed},
                            {"episodes", m.episodes},
                            {"gamma", m.gamma},
                            {"bonus_cap", m.bonus_cap},
                            {"solver_fits", m.solver_fits},
                            {"solver_nonconverged", m.solver_nonconverged},
                            {"optimism_checks", m.optimism_checks},
                            {"optimism_violations", m.optimism_violations},
                            {"drift_events", m.drift_events},
                            {"wall_clock_seconds", m.wall_clock_seconds}});
    if (run.kind == AgentKind::kLsviUcb) {
      write_file(dir / seed_file("trace_", run.kind, run.seed),
                 [&](std::ostream& out) { write_trace_csv(out, run.result.trace); });
      diag_inputs.push_back({run.kind, run.seed, &run.result.trace});
    }
  }
  write_text(dir / "metadata.json", meta.dump(2) + "\n");

  const AggregateTable table = aggregate(results);
  write_file(dir / "aggregate.csv", [&](std::ostream& out) { write_aggregate_csv(out, table); });
  write_file(dir / "comparison.csv", [&](std::ostream& out) {
    out << "agent,final_regret_mean,final_regret_std,seeds\n";
    char buf[96];
    for (const auto& row : comparison_table(results)) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d", row.final_regret_mean, row.final_regret_std,
                    row.seeds);
      out << row.agent << "," << buf << "\n";
    }
  });
  if (results.v_star) write_text(dir / "regret.svg", render_svg(table));

  std::string breach;
  const json diag = build_diagnostics(diag_inputs, results.feature_dim, results.v_star,
                                      results.closure_residual, &breach);
  write_text(dir / "diagnostics.json", diag.dump(2) + "\n");
  if (!breach.empty()) throw InvariantBreach(breach);
  return results;
}

std::string diagnose_run(const std::filesystem::path& run_dir) {
  const ExperimentConfig config = make_config(read_config_file(run_dir / "config.txt"));
  const auto env = build_environment(config.env);
  std::optional<double> v_star;
  try {
    v_star = exact_q_values(*env)->v_star();
  } catch (const UnsupportedOracle&) {
  }

  std::vector<std::vector<EpisodeRecord>> traces;
  traces.reserve(config.seeds.size());
  std::vector<DiagnosticsInput> inputs;
  for (const auto seed : config.seeds) {
    const auto path = run_dir / seed_file("trace_", AgentKind::kLsviUcb, seed);
    std::ifstream in(path);
    if (!in) throw IoError("missing trace " + path.string());
    traces.push_back(read_trace_csv(in));
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    inputs.push_back({AgentKind::kLsviUcb, config.seeds[i], &traces[i]});
  }
  std::string breach;
  const json diag = build_diagnostics(inputs, env->feature_dim(), v_star,
                                      counterexample_closure(*env, config.env), &breach);
  const std::string text = diag.dump(2) + "\n";
  write_text(run_dir / "diagnostics.json", text);
  if (!breach.empty()) throw InvariantBreach(breach);
  return text;
}

}  // namespace glmrl
