#include "glmrl/mdp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "glmrl/error.hpp"

namespace glmrl {

namespace {

// Slack for floating-point accumulation when checking sum-of-rewards in [0, 1].
constexpr double kRewardSlack = 1e-12;

}  // namespace

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

Trajectory rollout_episode(const EpisodicMdp& env, const Policy& policy, Rng& rng) {
  Trajectory traj;
  traj.steps.reserve(env.horizon());
  State state = env.sample_initial(rng);
  double total = 0.0;
  for (int h = 0; h < env.horizon(); ++h) {
    const int action = policy(h, state);
    if (action < 0 || action >= env.num_actions()) {
      throw EnvironmentFault("policy returned invalid action " + std::to_string(action));
    }
    const Transition tr = env.step(h, state, action, rng);
    if (!std::isfinite(tr.reward)) {
      throw EnvironmentFault("environment returned a non-finite reward at step " +
                             std::to_string(h));
    }
    traj.steps.push_back({state, action, tr.reward});
    total += tr.reward;
    state = tr.next;
  }
  traj.final_state = state;
  if (total < -kRewardSlack || total > 1.0 + kRewardSlack) {
    throw NormalizationViolation("episode reward " + std::to_string(total) +
                                 " is outside [0, 1]");
  }
  return traj;
}

Matrix bellman_backup(const TabularModel& model, int h, const Matrix& next_values) {
  const int S = model.num_states;
  const int A = model.num_actions;
  Matrix out = model.mean_reward[h];
  if (h + 1 >= model.horizon) return out;
  const Vector v_next = next_values.rowwise().maxCoeff();
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      out(s, a) += model.next_state_distribution(h, s, a).dot(v_next);
    }
  }
  return out;
}

QTable::QTable(const TabularModel& model) : q_(model.horizon) {
  Matrix next = Matrix::Zero(model.num_states, model.num_actions);
  for (int h = model.horizon - 1; h >= 0; --h) {
    q_[h] = bellman_backup(model, h, next);
    next = q_[h];
  }
  v_star_ = model.initial.dot(q_[0].rowwise().maxCoeff());
}

OraclePtr exact_q_values(const EpisodicMdp& env) {
  if (const auto* model = env.tabular_model()) return std::make_shared<QTable>(*model);
  if (auto oracle = env.closed_form_oracle()) return oracle;
  throw UnsupportedOracle("environment exposes no exact optimal-value oracle");
}

double evaluate_policy(const TabularModel& model, const std::vector<std::vector<int>>& actions) {
  Vector v = Vector::Zero(model.num_states);
  for (int h = model.horizon - 1; h >= 0; --h) {
    Vector cur(model.num_states);
    for (int s = 0; s < model.num_states; ++s) {
      const int a = actions[h][s];
      cur(s) = model.mean_reward[h](s, a);
      if (h + 1 < model.horizon) cur(s) += model.next_state_distribution(h, s, a).dot(v);
    }
    v = cur;
  }
  return model.initial.dot(v);
}

double max_reachable_return(const TabularModel& model) {
  Vector best = Vector::Zero(model.num_states);
  for (int h = model.horizon - 1; h >= 0; --h) {
    Vector cur = Vector::Zero(model.num_states);
    for (int s = 0; s < model.num_states; ++s) {
      double m = 0.0;
      for (int a = 0; a < model.num_actions; ++a) {
        double cont = 0.0;
        if (h + 1 < model.horizon) {
          const Vector& p = model.next_state_distribution(h, s, a);
          for (int s2 = 0; s2 < model.num_states; ++s2) {
            if (p(s2) > 0.0) cont = std::max(cont, best(s2));
          }
        }
        m = std::max(m, model.mean_reward[h](s, a) + cont);
      }
      cur(s) = m;
    }
    best = cur;
  }
  double out = 0.0;
  for (int s = 0; s < model.num_states; ++s) {
    if (model.initial(s) > 0.0) out = std::max(out, best(s));
  }
  return out;
}

void RegretLog::append(double episode_reward) {
  if (!std::isfinite(episode_reward) || episode_reward < -kRewardSlack ||
      episode_reward > 1.0 + kRewardSlack) {
    throw NormalizationViolation("episode reward " + std::to_string(episode_reward) +
                                 " is outside [0, 1]");
  }
  rewards_.push_back(episode_reward);
  reward_sum_ += episode_reward;
  if (v_star_) {
    cumulative_.push_back(static_cast<double>(rewards_.size()) * *v_star_ - reward_sum_);
  }
}

RegretLog regret_update(RegretLog log, double episode_reward) {
  log.append(episode_reward);
  return log;
}

}  // namespace glmrl
