#include <cmath>

#include <doctest.h>

#include "glmrl/agent.hpp"
#include "glmrl/diagnostics.hpp"
#include "glmrl/environments.hpp"
#include "glmrl/error.hpp"

using namespace glmrl;

namespace {

// One state, A actions, horizon H, reward r[a] / H per step.
std::shared_ptr<FiniteMdp> bandit_mdp(const std::vector<double>& r, int horizon) {
  TabularModel m;
  m.num_states = 1;
  m.num_actions = static_cast<int>(r.size());
  m.horizon = horizon;
  m.initial = Vector::Ones(1);
  m.transition.assign(horizon, std::vector<Vector>(r.size(), Vector::Ones(1)));
  Matrix rew(1, m.num_actions);
  for (int a = 0; a < m.num_actions; ++a) rew(0, a) = r[a] / horizon;
  m.mean_reward.assign(horizon, rew);
  return make_tabular(std::move(m));
}

AgentConfig identity_config(double c, double radius) {
  AgentConfig cfg;
  cfg.link = identity_link();
  cfg.gamma_scale = c;
  cfg.ball_radius = radius;
  return cfg;
}

}  // namespace

TEST_CASE("compute_gamma example") {
  GammaParams p;
  p.scale_c = 1;
  p.big_k = 1;
  p.kappa = 1;
  p.big_m = 1;
  p.dim = 1;
  p.bonus_cap = 1;
  p.episodes = 1;
  p.horizon = 1;
  // sqrt(3 + ln 3)
  CHECK(compute_gamma(p) == doctest::Approx(2.0245029732425956).epsilon(1e-14));
}

TEST_CASE("compute_gamma grows with T and is linear in C") {
  GammaParams p;
  p.dim = 4;
  p.episodes = 100;
  p.horizon = 3;
  const double g = compute_gamma(p);
  p.episodes = 200;
  CHECK(compute_gamma(p) > g);
  p.scale_c = 0.0;
  CHECK(compute_gamma(p) == 0.0);
  p.scale_c = 3.0;
  p.episodes = 100;
  CHECK(compute_gamma(p) == doctest::Approx(3.0 * g).epsilon(1e-14));
}

TEST_CASE("default bonus cap resolves to a consistent gamma") {
  const auto link = logistic_link();
  const GammaParams p = resolve_gamma_params(1.0, std::nullopt, 6, 1000, 3, *link);
  GammaParams unit = p;
  unit.bonus_cap = 1.0;
  CHECK(p.bonus_cap == compute_gamma(unit));
  CHECK(p.kappa == link->kappa);
  CHECK(effective_gamma(p) == p.bonus_cap);
  CHECK(effective_gamma(p) <= compute_gamma(p));

  const GammaParams capped = resolve_gamma_params(1.0, 0.5, 6, 1000, 3, *link);
  CHECK(effective_gamma(capped) == 0.5);

  CHECK_THROWS_AS(resolve_gamma_params(-1.0, std::nullopt, 2, 10, 2, *link), ParameterError);
  CHECK_THROWS_AS(resolve_gamma_params(1.0, 0.0, 2, 10, 2, *link), ParameterError);
  CHECK_THROWS_AS(resolve_gamma_params(1.0, std::nullopt, 0, 10, 2, *link), ParameterError);
}

TEST_CASE("optimistic_q_eval examples") {
  const Eigen::Vector2d e1(1, 0);
  const OptimisticQ zero({Vector::Zero(2), 1.0}, 0.0, CovarianceState(2), identity_link());
  CHECK(optimistic_q_eval(zero, e1) == 0.0);
  CHECK(optimistic_q_eval(zero, Eigen::Vector2d(0.3, -0.4)) == 0.0);

  const OptimisticQ wide({Vector::Zero(2), 1.0}, 10.0, CovarianceState(2), identity_link());
  CHECK(optimistic_q_eval(wide, Eigen::Vector2d(0.6, 0.8)) == 1.0);

  CovarianceState cov(2);
  for (int i = 0; i < 3; ++i) cov.update(e1);
  const OptimisticQ q({Eigen::Vector2d(0.3, 0.0), 1.0}, 1.0, cov, identity_link());
  CHECK(optimistic_q_eval(q, e1) == doctest::Approx(0.8).epsilon(1e-15));

  const OptimisticQ negative({Eigen::Vector2d(-0.9, 0.0), 1.0}, 0.1, cov, identity_link());
  CHECK(optimistic_q_eval(negative, e1) == 0.0);
  CHECK(optimistic_q_eval(OptimisticQ(), e1) == 1.0);
}

TEST_CASE("greedy_action on a fresh agent picks action 0 everywhere") {
  Rng rng(3);
  const auto env = make_tabular_random(3, 4, 3, rng);
  const LsviAgent agent(*env, identity_config(1.0, 2.0), 10);
  for (int h = 0; h < 3; ++h) {
    for (int s = 0; s < 3; ++s) {
      CHECK(agent.action_values(h, {s, 0.0}) == Vector::Ones(4));
      CHECK(agent.greedy_action(h, {s, 0.0}) == 0);
    }
  }
}

TEST_CASE("greedy_action picks the strict argmax") {
  const auto env = bandit_mdp({0.2, 0.7}, 1);
  LsviAgent agent(*env, identity_config(0.0, 2.0), 10);
  Rng rng(0);
  for (int a = 0; a < 2; ++a) {
    agent.observe(rollout_episode(*env, [a](int, const State&) { return a; }, rng));
  }
  const Vector v = agent.action_values(0, {0, 0.0});
  CHECK(v(0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(v(1) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(agent.greedy_action(0, {0, 0.0}) == 1);
}

TEST_CASE("greedy_action is repeatable under ties") {
  const auto env = bandit_mdp({0.5, 0.5, 0.5, 0.5}, 1);
  LsviAgent agent(*env, identity_config(0.0, 2.0), 10);
  Rng rng(0);
  agent.observe(rollout_episode(*env, [](int, const State&) { return 2; }, rng));
  // Unvisited actions evaluate to exactly 0 with gamma = 0.
  const Vector v = agent.action_values(0, {0, 0.0});
  CHECK(v(0) == 0.0);
  CHECK(v(1) == 0.0);
  CHECK(agent.greedy_action(0, {0, 0.0}) == 2);
  agent.observe(rollout_episode(*env, [](int, const State&) { return 0; }, rng));
  const int first = agent.greedy_action(0, {0, 0.0});
  for (int i = 0; i < 10; ++i) CHECK(agent.greedy_action(0, {0, 0.0}) == first);
}

TEST_CASE("backward_update after one episode fits the observed rewards at the last step") {
  Rng rng(4);
  const auto env = make_tabular_random(3, 2, 3, rng);
  LsviAgent agent(*env, identity_config(1.0, std::sqrt(6.0)), 50);
  Rng ep(1);
  const Trajectory traj = rollout_episode(*env, [](int, const State&) { return 1; }, ep);
  backward_update(agent, traj);
  const int last = 2;
  const Step& st = traj.steps[last];
  const Vector& theta = agent.q(last).theta_hat().theta;
  CHECK(theta(st.state.index * 2 + st.action) == doctest::Approx(st.reward).epsilon(1e-14));
  CHECK(theta.cwiseAbs().sum() == doctest::Approx(st.reward).epsilon(1e-14));
  CHECK(agent.targets(last)(0) == st.reward);
  CHECK(agent.covariance(last).count() == 1);
}

TEST_CASE("targets stay in [0, 2] and the last step has no continuation") {
  Rng rng(5);
  const auto env = make_tabular_random(3, 2, 4, rng, true);
  LsviAgent agent(*env, identity_config(1.0, std::sqrt(6.0)), 200);
  Rng ep(2);
  std::vector<double> last_rewards;
  for (int t = 0; t < 200; ++t) {
    const Trajectory traj = rollout_episode(*env, [&](int h, const State& s) { return agent.act(h, s, ep); }, ep);
    last_rewards.push_back(traj.steps.back().reward);
    agent.observe(traj);
  }
  const Vector y_last = agent.targets(3);
  for (int t = 0; t < 200; ++t) CHECK(y_last(t) == last_rewards[t]);
  for (int h = 0; h < 4; ++h) {
    const Vector y = agent.targets(h);
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y.maxCoeff() <= 2.0);
    CHECK(agent.covariates(h).rows() == 200);
  }
}

TEST_CASE("epoch length delays refits") {
  Rng rng(6);
  const auto env = make_tabular_random(2, 2, 2, rng);
  AgentConfig cfg = identity_config(1.0, 2.0);
  cfg.epoch_length = 3;
  LsviAgent agent(*env, cfg, 10);
  Rng ep(0);
  for (int t = 1; t <= 6; ++t) {
    agent.observe(rollout_episode(*env, [](int, const State&) { return 0; }, ep));
    CHECK(agent.q(0).fitted() == (t >= 3));
    CHECK(agent.total_fits() == 2 * (t / 3));
  }
}

TEST_CASE("agent rejects malformed input") {
  const auto env = bandit_mdp({0.5, 0.5}, 2);
  AgentConfig cfg = identity_config(1.0, 1.0);
  cfg.link = nullptr;
  CHECK_THROWS_AS(LsviAgent(*env, cfg, 10), ParameterError);
  cfg = identity_config(1.0, 0.0);
  CHECK_THROWS_AS(LsviAgent(*env, cfg, 10), ParameterError);
  cfg = identity_config(1.0, 1.0);
  cfg.epoch_length = 0;
  CHECK_THROWS_AS(LsviAgent(*env, cfg, 10), ParameterError);
  LsviAgent agent(*env, identity_config(1.0, 1.0), 10);
  Trajectory short_traj;
  short_traj.steps.resize(1);
  CHECK_THROWS_AS(agent.observe(short_traj), ParameterError);
}

TEST_CASE("run_lsvi_ucb basic contracts") {
  Rng rng(7);
  const auto env = make_tabular_random(3, 2, 3, rng);
  const AgentConfig cfg = identity_config(1.0, std::sqrt(6.0));
  const RunResult one = run_lsvi_ucb(*env, 1, cfg, 0);
  CHECK(one.log.size() == 1);
  CHECK(one.trace.size() == 1);
  CHECK(one.metadata.agent == "lsvi_ucb");
  CHECK(one.metadata.solver_fits == 3);

  const auto single = bandit_mdp({0.6}, 3);
  for (auto kind : {AgentKind::kLsviUcb, AgentKind::kRandom, AgentKind::kEpsGreedy}) {
    const RunResult r = run_agent(*single, kind, 50, cfg, 1);
    for (double reg : r.log.cumulative_regret()) CHECK(std::abs(reg) <= 1e-12);
  }
  CHECK_THROWS_AS(run_lsvi_ucb(*env, 0, cfg, 0), ParameterError);
}

TEST_CASE("runs are reproducible from the seed") {
  Rng rng(8);
  const auto env = make_tabular_random(3, 2, 3, rng, true);
  const AgentConfig cfg = identity_config(1.0, std::sqrt(6.0));
  for (auto kind : {AgentKind::kLsviUcb, AgentKind::kRandom, AgentKind::kEpsGreedy}) {
    const RunResult a = run_agent(*env, kind, 100, cfg, 42);
    const RunResult b = run_agent(*env, kind, 100, cfg, 42);
    const RunResult c = run_agent(*env, kind, 100, cfg, 43);
    CHECK(a.log.rewards() == b.log.rewards());
    CHECK(a.log.cumulative_regret() == b.log.cumulative_regret());
    if (kind != AgentKind::kLsviUcb) CHECK(a.log.rewards() != c.log.rewards());
  }
}

TEST_CASE("eps-greedy baseline has no bonus and random has no estimates") {
  Rng rng(9);
  const auto env = make_tabular_random(2, 2, 2, rng);
  const RunResult g = run_agent(*env, AgentKind::kEpsGreedy, 20, identity_config(1.0, 2.0), 0);
  CHECK(g.metadata.gamma == 0.0);
  for (const auto& ep : g.trace) CHECK(ep.bonus_sum == 0.0);
  const RunResult r = run_agent(*env, AgentKind::kRandom, 20, identity_config(1.0, 2.0), 0);
  CHECK(std::isnan(r.trace[0].steps[0].qbar));
  CHECK(r.metadata.solver_fits == 0);
}

TEST_CASE("optimism holds at every (h, s, a) after learning on tabular envs") {
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    Rng rng(seed);
    const auto env = make_tabular_random(3, 2, 3, rng, true);
    LsviAgent agent(*env, identity_config(1.0, std::sqrt(6.0)), 300);
    Rng ep(seed);
    for (int t = 0; t < 300; ++t) {
      agent.observe(rollout_episode(*env, [&](int h, const State& s) { return agent.act(h, s, ep); }, ep));
    }
    const auto check = check_optimism_all_pairs(agent, *env, QTable(*env->tabular_model()));
    CHECK(check.checks == 18);
    CHECK(check.violations == 0);
  }
}

TEST_CASE("logistic agent runs on a rescaled tabular env") {
  Rng rng(10);
  const auto base = make_tabular_random(2, 2, 2, rng);
  const FiniteMdp env = base->with_affine_rewards(0.4, 1.0 / (1.0 + std::exp(1.0)));
  AgentConfig cfg;
  cfg.link = logistic_link();
  cfg.gamma_scale = 0.1;
  cfg.ball_radius = 2.0;
  cfg.solver.max_iters = 200;
  const RunResult r = run_lsvi_ucb(env, 60, cfg, 3);
  CHECK(r.log.size() == 60);
  CHECK(r.metadata.solver_fits == 120);
}

TEST_CASE("agent kind names") {
  for (auto kind : {AgentKind::kLsviUcb, AgentKind::kRandom, AgentKind::kEpsGreedy}) {
    CHECK(agent_kind_by_name(agent_name(kind)) == kind);
  }
  CHECK_THROWS_AS(agent_kind_by_name("thompson"), ConfigError);
}
