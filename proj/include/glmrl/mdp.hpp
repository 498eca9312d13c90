#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "glmrl/rng.hpp"

namespace glmrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Environment state. Finite environments use `index`; the continuous
/// counterexample stores its stage in `index` and its mixing weight in `alpha`.
struct State {
  int index = 0;
  double alpha = 0.0;

  bool operator==(const State&) const = default;
};

struct Transition {
  State next;
  double reward = 0.0;
};

/// Exact finite-horizon model: the tables the dynamic-programming oracle needs.
/// Steps are 0-based (h = 0 .. horizon-1).
struct TabularModel {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  /// transition[h][s * A + a] is a probability vector over next states.
  std::vector<std::vector<Vector>> transition;
  /// mean_reward[h](s, a)
  std::vector<Matrix> mean_reward;
  Vector initial;

  const Vector& next_state_distribution(int h, int s, int a) const {
    return transition[h][s * num_actions + a];
  }
};

/// Optimal action values Q*_h(s, a) and V* = E_{s~mu}[max_a Q*_1(s, a)].
class OptimalValues {
 public:
  virtual ~OptimalValues() = default;
  virtual double q(int h, const State& s, int a) const = 0;
  virtual double v_star() const = 0;
};

using OraclePtr = std::shared_ptr<const OptimalValues>;

/// Episodic MDP seen through a feature map phi: S x A -> unit ball of R^d.
///
/// Implementations are immutable; all randomness flows through the Rng passed
/// in, so rollouts with equal seeds are identical and independent runs can
/// proceed on different threads.
class EpisodicMdp {
 public:
  virtual ~EpisodicMdp() = default;

  virtual int horizon() const = 0;
  virtual int num_actions() const = 0;
  virtual int feature_dim() const = 0;

  virtual State sample_initial(Rng& rng) const = 0;
  /// Transition from `state` at step h (0-based) under `action`.
  virtual Transition step(int h, const State& state, int action, Rng& rng) const = 0;
  virtual void features(const State& state, int action, Eigen::Ref<Vector> out) const = 0;

  Vector features(const State& state, int action) const {
    Vector phi(feature_dim());
    features(state, action, phi);
    return phi;
  }

  /// Exact tables for finite environments; empty otherwise.
  virtual const TabularModel* tabular_model() const { return nullptr; }
  /// Closed-form optimal values for environments that are not enumerable.
  virtual OraclePtr closed_form_oracle() const { return nullptr; }
};

struct Step {
  State state;
  int action = 0;
  double reward = 0.0;

  bool operator==(const Step&) const = default;
};

/// One episode: exactly `horizon` steps. `final_state` is the state reached
/// after the last action (never acted in).
struct Trajectory {
  std::vector<Step> steps;
  State final_state;

  double total_reward() const;
  bool operator==(const Trajectory&) const = default;
};

using Policy = std::function<int(int h, const State& state)>;

/// Samples one episode. Throws EnvironmentFault on a non-finite reward or an
/// invalid action, NormalizationViolation if the episode reward leaves [0, 1].
Trajectory rollout_episode(const EpisodicMdp& env, const Policy& policy, Rng& rng);

/// Backward-induction table of Q*_h(s, a) for a tabular model.
class QTable final : public OptimalValues {
 public:
  explicit QTable(const TabularModel& model);

  double q(int h, const State& s, int a) const override { return q_[h](s.index, a); }
  double q(int h, int s, int a) const { return q_[h](s, a); }
  double v(int h, int s) const { return q_[h].row(s).maxCoeff(); }
  double v_star() const override { return v_star_; }
  const Matrix& table(int h) const { return q_[h]; }

 private:
  std::vector<Matrix> q_;
  double v_star_ = 0.0;
};

/// Q* for any environment with an oracle; throws UnsupportedOracle otherwise.
OraclePtr exact_q_values(const EpisodicMdp& env);

/// (T_h g)(s, a) = E[r_h + max_a' g(s', a') | s, a] on a tabular model. At the
/// last step the continuation is ignored.
Matrix bellman_backup(const TabularModel& model, int h, const Matrix& next_values);

/// Expected return of a deterministic non-stationary policy given as
/// actions[h][s].
double evaluate_policy(const TabularModel& model, const std::vector<std::vector<int>>& actions);

/// Largest return any action sequence can collect along transitions with
/// positive probability; used to enforce the sum-of-rewards <= 1 contract.
double max_reachable_return(const TabularModel& model);

/// Per-episode rewards against a fixed V*. Cumulative regret after episode t
/// is (t + 1) V* - sum of the first t + 1 rewards, recomputed on every append.
class RegretLog {
 public:
  explicit RegretLog(std::optional<double> v_star = std::nullopt) : v_star_(v_star) {}

  /// Throws NormalizationViolation if the reward is outside [0, 1].
  void append(double episode_reward);

  std::optional<double> v_star() const { return v_star_; }
  const std::vector<double>& rewards() const { return rewards_; }
  /// Empty when no V* is known.
  const std::vector<double>& cumulative_regret() const { return cumulative_; }
  std::size_t size() const { return rewards_.size(); }

 private:
  std::optional<double> v_star_;
  std::vector<double> rewards_;
  std::vector<double> cumulative_;
  double reward_sum_ = 0.0;
};

RegretLog regret_update(RegretLog log, double episode_reward);

}  // namespace glmrl
