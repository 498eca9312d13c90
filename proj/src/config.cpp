#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "glmrl/environments.hpp"
#include "glmrl/error.hpp"
#include "glmrl/harness.hpp"

namespace glmrl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "env",        "states",       "actions",   "horizon",        "dim",
      "cx_gamma",   "env_seed",     "stochastic_rewards", "link", "identity_unit_curvature",
      "episodes",   "gamma_scale",  "gamma_cap", "ball_radius",    "solver",
      "max_iters",  "tolerance",    "refresh_period", "epoch_length", "seeds",
      "baselines",  "epsilon",      "out",       "threads"};
  return keys;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value'");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    if (const auto dots = part.find(".."); dots != std::string::npos) {
      const long long lo = parse_int("seeds", trim(part.substr(0, dots)));
      const long long hi = parse_int("seeds", trim(part.substr(dots + 2)));
      if (lo < 0 || hi < lo) throw ConfigError("bad seed range '" + part + "'");
      for (long long s = lo; s <= hi; ++s) out.push_back(static_cast<std::uint64_t>(s));
    } else {
      const long long s = parse_int("seeds", part);
      if (s < 0) throw ConfigError("seeds must be non-negative");
      out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

ExperimentConfig make_config(const ConfigMap& values) {
  ExperimentConfig c;
  const auto& known = config_keys();
  for (const auto& [key, v] : values) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (key == "env") {
      c.env.family = v;
    } else if (key == "states") {
      c.env.states = static_cast<int>(parse_int(key, v));
    } else if (key == "actions") {
      c.env.actions = static_cast<int>(parse_int(key, v));
    } else if (key == "horizon") {
      c.env.horizon = static_cast<int>(parse_int(key, v));
    } else if (key == "dim") {
      c.env.dim = static_cast<int>(parse_int(key, v));
    } else if (key == "cx_gamma") {
      c.env.cx_gamma = parse_double(key, v);
    } else if (key == "env_seed") {
      c.env.env_seed = static_cast<std::uint64_t>(parse_int(key, v));
    } else if (key == "stochastic_rewards") {
      c.env.stochastic_rewards = parse_bool(key, v);
    } else if (key == "link") {
      c.link = v;
    } else if (key == "identity_unit_curvature") {
      c.identity_unit_curvature = parse_bool(key, v);
    } else if (key == "episodes") {
      c.episodes = static_cast<int>(parse_int(key, v));
    } else if (key == "gamma_scale") {
      c.gamma_scale = parse_double(key, v);
    } else if (key == "gamma_cap") {
      c.gamma_cap = v == "auto" ? std::nullopt : std::optional<double>(parse_double(key, v));
    } else if (key == "ball_radius") {
      c.ball_radius = v == "sqrt_d" ? std::nullopt : std::optional<double>(parse_double(key, v));
    } else if (key == "solver") {
      if (v == "auto") {
        c.solver.method = SolverMethod::kAuto;
      } else if (v == "pgd") {
        c.solver.method = SolverMethod::kProjectedGradient;
      } else if (v == "exact") {
        c.solver.method = SolverMethod::kExactQuadratic;
      } else {
        throw ConfigError("'solver' expects auto | pgd | exact, got '" + v + "'");
      }
    } else if (key == "max_iters") {
      c.solver.max_iters = static_cast<int>(parse_int(key, v));
    } else if (key == "tolerance") {
      c.solver.tolerance = parse_double(key, v);
    } else if (key == "refresh_period") {
      c.solver.refresh_period = static_cast<int>(parse_int(key, v));
    } else if (key == "epoch_length") {
      c.epoch_length = static_cast<int>(parse_int(key, v));
    } else if (key == "seeds") {
      c.seeds = parse_seed_list(v);
    } else if (key == "baselines") {
      c.baselines.clear();
      if (v != "none") {
        for (const auto& b : split(v, ',')) {
          if (b.empty()) continue;
          if (b != "random" && b != "eps_greedy") {
            throw ConfigError("unknown baseline '" + b + "' (expected random | eps_greedy)");
          }
          c.baselines.push_back(b);
        }
      }
    } else if (key == "epsilon") {
      c.epsilon = parse_double(key, v);
    } else if (key == "out") {
      c.out_dir = v;
    } else if (key == "threads") {
      c.threads = static_cast<int>(parse_int(key, v));
    }
  }

  const auto& fam = c.env.family;
  if (fam != "tabular" && fam != "linear" && fam != "counterexample" && fam != "chain") {
    throw ConfigError("unknown env '" + fam + "' (expected tabular | linear | counterexample | chain)");
  }
  if (c.link != "identity" && c.link != "logistic") {
    throw ConfigError("unknown link '" + c.link + "' (expected identity | logistic)");
  }
  if (c.episodes < 1) throw ConfigError("episodes must be >= 1");
  if (c.env.states < 1 || c.env.actions < 1 || c.env.horizon < 1 || c.env.dim < 1) {
    throw ConfigError("states, actions, horizon and dim must be >= 1");
  }
  if (c.gamma_scale < 0.0) throw ConfigError("gamma_scale must be non-negative");
  if (c.gamma_cap && *c.gamma_cap <= 0.0) throw ConfigError("gamma_cap must be positive");
  if (c.ball_radius && *c.ball_radius <= 0.0) throw ConfigError("ball_radius must be positive");
  if (c.solver.max_iters < 1 || c.solver.tolerance <= 0.0 || c.solver.refresh_period < 0) {
    throw ConfigError("solver options out of range");
  }
  if (c.epoch_length < 1) throw ConfigError("epoch_length must be >= 1");
  if (c.epsilon < 0.0 || c.epsilon > 1.0) throw ConfigError("epsilon must lie in [0, 1]");
  if (c.threads < 0) throw ConfigError("threads must be >= 0");
  if (c.seeds.empty()) throw ConfigError("seed list is empty");
  return c;
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  }
  std::string baselines;
  for (std::size_t i = 0; i < c.baselines.size(); ++i) baselines += (i ? "," : "") + c.baselines[i];
  const char* solver = c.solver.method == SolverMethod::kAuto
                           ? "auto"
                           : (c.solver.method == SolverMethod::kProjectedGradient ? "pgd" : "exact");
  out << "env = " << c.env.family << "\n"
      << "states = " << c.env.states << "\n"
      << "actions = " << c.env.actions << "\n"
      << "horizon = " << c.env.horizon << "\n"
      << "dim = " << c.env.dim << "\n"
      << "cx_gamma = " << format_double(c.env.cx_gamma) << "\n"
      << "env_seed = " << c.env.env_seed << "\n"
      << "stochastic_rewards = " << (c.env.stochastic_rewards ? "true" : "false") << "\n"
      << "link = " << c.link << "\n"
      << "identity_unit_curvature = " << (c.identity_unit_curvature ? "true" : "false") << "\n"
      << "episodes = " << c.episodes << "\n"
      << "gamma_scale = " << format_double(c.gamma_scale) << "\n"
      << "gamma_cap = " << (c.gamma_cap ? format_double(*c.gamma_cap) : "auto") << "\n"
      << "ball_radius = " << (c.ball_radius ? format_double(*c.ball_radius) : "sqrt_d") << "\n"
      << "solver = " << solver << "\n"
      << "max_iters = " << c.solver.max_iters << "\n"
      << "tolerance = " << format_double(c.solver.tolerance) << "\n"
      << "refresh_period = " << c.solver.refresh_period << "\n"
      << "epoch_length = " << c.epoch_length << "\n"
      << "seeds = " << seeds << "\n"
      << "baselines = " << (baselines.empty() ? "none" : baselines) << "\n"
      << "epsilon = " << format_double(c.epsilon) << "\n"
      << "out = " << c.out_dir.string() << "\n"
      << "threads = " << c.threads << "\n";
  return out.str();
}

std::shared_ptr<EpisodicMdp> build_environment(const EnvConfig& env) {
  Rng rng(env.env_seed);
  if (env.family == "tabular") {
    return make_tabular_random(env.states, env.actions, env.horizon, rng, env.stochastic_rewards);
  }
  if (env.family == "linear") return make_linear_mdp(env.dim, env.states, env.actions, env.horizon, rng);
  if (env.family == "counterexample") return make_counterexample(env.cx_gamma);
  if (env.family == "chain") return make_chain(env.states, env.horizon);
  throw ConfigError("unknown env '" + env.family + "'");
}

AgentConfig build_agent_config(const ExperimentConfig& config, int feature_dim) {
  AgentConfig a;
  a.link = link_by_name(config.link, config.identity_unit_curvature);
  a.gamma_scale = config.gamma_scale;
  a.bonus_cap = config.gamma_cap;
  a.ball_radius = config.ball_radius ? *config.ball_radius : std::sqrt(static_cast<double>(feature_dim));
  a.solver = config.solver;
  a.epoch_length = config.epoch_length;
  a.epsilon = config.epsilon;
  return a;
}

}  // namespace glmrl
