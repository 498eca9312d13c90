#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "glmrl/error.hpp"
#include "glmrl/harness.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

const std::map<std::string, std::string> kKeyHelp{
    {"env", "tabular | linear | counterexample | chain"},
    {"states", "number of states (chain length for env=chain)"},
    {"actions", "number of actions"},
    {"horizon", "episode length H"},
    {"dim", "feature dimension for env=linear"},
    {"cx_gamma", "bonus cap the counterexample is built for"},
    {"env_seed", "seed used to draw the environment"},
    {"stochastic_rewards", "Bernoulli rewards instead of their means (true | false)"},
    {"link", "identity | logistic"},
    {"identity_unit_curvature", "certify the identity link with M = 1 instead of 0"},
    {"episodes", "episodes per run (T)"},
    {"gamma_scale", "confidence constant C"},
    {"gamma_cap", "bonus cap, or auto"},
    {"ball_radius", "parameter-ball radius B, or sqrt_d"},
    {"solver", "auto | pgd | exact"},
    {"max_iters", "gradient iterations per fit"},
    {"tolerance", "stop once a gradient step moves theta by at most this"},
    {"refresh_period", "rank-one updates between full re-inversions (0 = never)"},
    {"epoch_length", "episodes between refits"},
    {"seeds", "3, 1,4,9 or 0..9"},
    {"baselines", "comma-separated subset of random,eps_greedy, or none"},
    {"epsilon", "exploration rate of eps_greedy"},
    {"out", "output directory"},
    {"threads", "worker threads for the seed pool (0 = OpenMP default)"},
};

void print_comparison(const glmrl::ExperimentResults& results) {
  std::printf("%-12s %20s %20s %6s\n", "agent", "final_regret_mean", "final_regret_std", "seeds");
  for (const auto& row : glmrl::comparison_table(results)) {
    std::printf("%-12s %20.6f %20.6f %6d\n", row.agent.c_str(), row.final_regret_mean,
                row.final_regret_std, row.seeds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSVI-UCB with generalized linear function approximation"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
  std::string config_file;
  run->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> flags;
  for (const auto& key : glmrl::config_keys()) {
    run->add_option("--" + kebab(key), flags[key], kKeyHelp.at(key))->type_name("VALUE");
  }
  std::string seed_alias;
  run->add_option("--seed", seed_alias, "alias of --seeds");

  auto* plot = app.add_subcommand("plot", "Render an aggregate CSV as an SVG chart");
  std::string plot_in;
  std::string plot_out;
  plot->add_option("--in", plot_in)->required();
  plot->add_option("--out", plot_out)->required();

  auto* diagnose = app.add_subcommand("diagnose", "Recompute diagnostics of a finished run");
  std::string run_dir;
  diagnose->add_option("--run", run_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      glmrl::ConfigMap values;
      if (!config_file.empty()) values = glmrl::read_config_file(config_file);
      for (const auto& key : glmrl::config_keys()) {
        if (run->count("--" + kebab(key)) > 0) values[key] = flags[key];
      }
      if (run->count("--seed") > 0) values["seeds"] = seed_alias;
      const glmrl::ExperimentConfig config = glmrl::make_config(values);
      const auto results = glmrl::run_experiment(config);
      print_comparison(results);
      std::cout << "artifacts written to " << config.out_dir.string() << "\n";
    } else if (*plot) {
      glmrl::emit_plot(plot_in, plot_out);
    } else if (*diagnose) {
      std::cout << glmrl::diagnose_run(run_dir);
    }
  } catch (const glmrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const glmrl::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const glmrl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const glmrl::Error& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return kExitInvariant;
  }
  return 0;
}
