#include "glmrl/agent.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "glmrl/error.hpp"

namespace glmrl {

namespace {

constexpr double kOptimismTol = 1e-9;
constexpr double kTargetSlack = 1e-12;

}  // namespace

double compute_gamma(const GammaParams& p) {
  const double d = p.dim;
  const double log_term =
      std::log((1.0 + p.big_k + p.bonus_cap) * static_cast<double>(p.episodes) * p.horizon);
  return p.scale_c * p.big_k / p.kappa * std::sqrt(1.0 + p.big_m + p.big_k + d * d * log_term);
}

GammaParams resolve_gamma_params(double scale_c, std::optional<double> bonus_cap, int dim,
                                 int episodes, int horizon, const LinkSpec& link) {
  if (!(scale_c >= 0.0) || !std::isfinite(scale_c)) {
    throw ParameterError("gamma scale C must be finite and non-negative");
  }
  if (dim < 1 || episodes < 1 || horizon < 1) throw ParameterError("d, T and H must be >= 1");
  if (bonus_cap && (!(*bonus_cap > 0.0) || !std::isfinite(*bonus_cap))) {
    throw ParameterError("bonus cap Gamma must be finite and positive");
  }
  GammaParams p;
  p.scale_c = scale_c;
  p.dim = dim;
  p.episodes = episodes;
  p.horizon = horizon;
  p.kappa = link.kappa;
  p.big_k = link.big_k;
  p.big_m = link.big_m;
  p.bonus_cap = 1.0;
  p.bonus_cap = bonus_cap ? *bonus_cap : compute_gamma(p);
  return p;
}

double effective_gamma(const GammaParams& p) { return std::min(compute_gamma(p), p.bonus_cap); }

OptimisticQ::OptimisticQ(GlmParams theta_hat, double gamma, CovarianceState cov, LinkPtr link)
    : theta_hat_(std::move(theta_hat)), gamma_(gamma), cov_(std::move(cov)), link_(std::move(link)) {}

double OptimisticQ::eval(const Eigen::Ref<const Vector>& phi, std::uint64_t* drift_events) const {
  if (!link_) return 1.0;
  const double z = std::clamp(phi.dot(theta_hat_.theta), -1.0, 1.0);
  const double q = link_->eval(z) + gamma_ * mahalanobis_bonus(cov_, phi, drift_events);
  return std::clamp(q, 0.0, 1.0);
}

double optimistic_q_eval(const OptimisticQ& q, const Eigen::Ref<const Vector>& phi) {
  return q.eval(phi);
}

LsviAgent::LsviAgent(const EpisodicMdp& env, AgentConfig config, int total_episodes)
    : env_(env),
      config_(std::move(config)),
      horizon_(env.horizon()),
      num_actions_(env.num_actions()),
      dim_(env.feature_dim()) {
  if (!config_.link) throw ParameterError("agent needs a link function");
  if (!(config_.ball_radius > 0.0)) throw ParameterError("ball radius must be positive");
  if (config_.epoch_length < 1) throw ParameterError("epoch length must be >= 1");
  if (config_.epsilon < 0.0 || config_.epsilon > 1.0) throw ParameterError("epsilon must lie in [0, 1]");
  gamma_params_ = resolve_gamma_params(config_.gamma_scale, config_.bonus_cap, dim_, total_episodes,
                                       horizon_, *config_.link);
  gamma_ = config_.greedy_baseline ? 0.0 : effective_gamma(gamma_params_);
  q_.resize(horizon_);
  cov_.assign(horizon_, CovarianceState(dim_, config_.solver.refresh_period));
  covariates_.resize(horizon_);
  action_features_.assign(horizon_, std::vector<std::vector<double>>(num_actions_));
  rewards_.resize(horizon_);
}

Vector LsviAgent::action_values(int h, const State& state) const {
  Vector values(num_actions_);
  Vector phi(dim_);
  for (int a = 0; a < num_actions_; ++a) {
    env_.features(state, a, phi);
    values(a) = q_[h].eval(phi);
  }
  return values;
}

int LsviAgent::greedy_action(int h, const State& state) const {
  const Vector values = action_values(h, state);
  int best = 0;
  for (int a = 1; a < num_actions_; ++a) {
    if (values(a) > values(best)) best = a;
  }
  return best;
}

int LsviAgent::act(int h, const State& state, Rng& rng) const {
  if (config_.greedy_baseline && rng.bernoulli(config_.epsilon)) {
    return rng.uniform_int(num_actions_);
  }
  return greedy_action(h, state);
}

Eigen::Map<const RowMatrix> LsviAgent::rows(const std::vector<double>& buffer) const {
  return {buffer.data(), static_cast<Eigen::Index>(buffer.size() / dim_), dim_};
}

RowMatrix LsviAgent::covariates(int h) const { return rows(covariates_[h]); }

kernels::OptimisticMax LsviAgent::continuation(int h) const {
  const OptimisticQ& next = q_[h + 1];
  std::vector<RowMatrixRef> feats;
  feats.reserve(num_actions_);
  for (int a = 0; a < num_actions_; ++a) feats.emplace_back(rows(action_features_[h + 1][a]));
  if (!next.fitted()) {
    kernels::OptimisticMax out;
    out.values = Vector::Ones(static_cast<Eigen::Index>(rewards_[h].size()));
    return out;
  }
  return kernels::parallel::optimistic_max(feats, next.theta_hat().theta, next.cov().lambda_inv(),
                                           next.gamma(), *next.link());
}

Vector LsviAgent::targets(int h) const {
  Vector y = Eigen::Map<const Vector>(rewards_[h].data(), static_cast<Eigen::Index>(rewards_[h].size()));
  if (h + 1 < horizon_) y += continuation(h).values;
  return y;
}

bool LsviAgent::refit(int h) {
  Vector y = Eigen::Map<const Vector>(rewards_[h].data(), static_cast<Eigen::Index>(rewards_[h].size()));
  if (h + 1 < horizon_) {
    const auto cont = continuation(h);
    drift_events_ += cont.drift_events;
    y += cont.values;
  }
  if (y.size() > 0 && (y.minCoeff() < -kTargetSlack || y.maxCoeff() > 2.0 + kTargetSlack)) {
    throw InvariantBreach("regression target outside [0, 2] at step " + std::to_string(h));
  }

  const auto x = rows(covariates_[h]);
  const LinkSpec& link = *config_.link;
  const SolverMethod method = config_.solver.method;
  GlmParams params{Vector::Zero(dim_), config_.ball_radius};
  bool converged = true;
  if (link.is_identity && method != SolverMethod::kProjectedGradient) {
    // Lambda already carries the Gram matrix of exactly these covariates.
    params.theta = solve_ball_constrained_ls(cov_[h].gram(), x.transpose() * y, config_.ball_radius);
  } else {
    std::optional<Vector> warm;
    if (q_[h].fitted()) warm = q_[h].theta_hat().theta;
    FitResult fit = fit_constrained_glm(x, y, link, config_.ball_radius, config_.solver, warm);
    params = std::move(fit.params);
    converged = fit.converged;
  }
  ++total_fits_;
  if (!converged) ++nonconverged_fits_;
  q_[h] = OptimisticQ(std::move(params), gamma_, cov_[h], config_.link);
  return converged;
}

EpisodeRecord LsviAgent::observe(const Trajectory& traj) {
  if (static_cast<int>(traj.steps.size()) != horizon_) {
    throw ParameterError("trajectory length differs from the horizon");
  }
  EpisodeRecord record;
  record.steps.reserve(horizon_);
  Vector phi(dim_);
  for (int h = 0; h < horizon_; ++h) {
    const Step& st = traj.steps[h];
    env_.features(st.state, st.action, phi);
    StepRecord rec;
    rec.state = st.state;
    rec.action = st.action;
    rec.reward = st.reward;
    rec.qbar = q_[h].eval(phi, &drift_events_);
    const double norm = mahalanobis_bonus(cov_[h], phi, &drift_events_);
    rec.bonus_sq = norm * norm;
    rec.conf = gamma_ * norm;
    record.bonus_sum += rec.conf;
    record.reward += st.reward;
    record.steps.push_back(rec);

    covariates_[h].insert(covariates_[h].end(), phi.data(), phi.data() + dim_);
    for (int a = 0; a < num_actions_; ++a) {
      const double* src = phi.data();
      Vector alt;
      if (a != st.action) {
        alt = env_.features(st.state, a);
        src = alt.data();
      }
      action_features_[h][a].insert(action_features_[h][a].end(), src, src + dim_);
    }
    rewards_[h].push_back(st.reward);
    cov_[h].update(phi);
  }

  ++episodes_;
  if (episodes_ % config_.epoch_length == 0) {
    for (int h = horizon_ - 1; h >= 0; --h) record.solver_converged &= refit(h);
  }
  return record;
}

EpisodeRecord backward_update(LsviAgent& agent, const Trajectory& traj) { return agent.observe(traj); }

std::string agent_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::kLsviUcb:
      return "lsvi_ucb";
    case AgentKind::kRandom:
      return "random";
    case AgentKind::kEpsGreedy:
      return "eps_greedy";
  }
  return "unknown";
}

AgentKind agent_kind_by_name(const std::string& name) {
  if (name == "lsvi_ucb") return AgentKind::kLsviUcb;
  if (name == "random") return AgentKind::kRandom;
  if (name == "eps_greedy") return AgentKind::kEpsGreedy;
  throw ConfigError("unknown agent or baseline '" + name + "' (expected random | eps_greedy)");
}

RunResult run_agent(const EpisodicMdp& env, AgentKind kind, int episodes, const AgentConfig& config,
                    std::uint64_t seed) {
  if (episodes < 1) throw ParameterError("number of episodes must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  OraclePtr oracle;
  try {
    oracle = exact_q_values(env);
  } catch (const UnsupportedOracle&) {
  }

  RunResult result{RegretLog(oracle ? std::optional<double>(oracle->v_star()) : std::nullopt), {}, {}};
  result.trace.reserve(episodes);

  std::optional<LsviAgent> agent;
  if (kind != AgentKind::kRandom) {
    AgentConfig cfg = config;
    cfg.greedy_baseline = kind == AgentKind::kEpsGreedy;
    agent.emplace(env, std::move(cfg), episodes);
  }

  const Rng base(seed);
  RunMetadata& meta = result.metadata;
  for (int t = 0; t < episodes; ++t) {
    Rng rng = base.child(static_cast<std::uint64_t>(t));
    const Policy policy = [&](int h, const State& s) {
      return agent ? agent->act(h, s, rng) : rng.uniform_int(env.num_actions());
    };
    const Trajectory traj = rollout_episode(env, policy, rng);

    EpisodeRecord record;
    if (agent) {
      record = agent->observe(traj);
    } else {
      for (const Step& st : traj.steps) {
        StepRecord rec;
        rec.state = st.state;
        rec.action = st.action;
        rec.reward = st.reward;
        rec.qbar = std::numeric_limits<double>::quiet_NaN();
        record.steps.push_back(rec);
        record.reward += st.reward;
      }
    }
    record.episode = t + 1;
    if (oracle) {
      for (int h = 0; h < static_cast<int>(record.steps.size()); ++h) {
        StepRecord& rec = record.steps[h];
        rec.q_star = oracle->q(h, rec.state, rec.action);
        if (agent) {
          ++meta.optimism_checks;
          if (rec.qbar < *rec.q_star - kOptimismTol) ++meta.optimism_violations;
        }
      }
    }
    result.log.append(record.reward);
    result.trace.push_back(std::move(record));
  }

  meta.agent = agent_name(kind);
  meta.seed = seed;
  meta.episodes = episodes;
  if (agent) {
    meta.gamma = agent->gamma();
    meta.bonus_cap = agent->gamma_params().bonus_cap;
    meta.solver_fits = agent->total_fits();
    meta.solver_nonconverged = agent->nonconverged_fits();
    meta.drift_events = agent->drift_events();
  }
  meta.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run_lsvi_ucb(const EpisodicMdp& env, int episodes, const AgentConfig& config,
                       std::uint64_t seed) {
  return run_agent(env, AgentKind::kLsviUcb, episodes, config, seed);
}

}  // namespace glmrl
