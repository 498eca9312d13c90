#pragma once

#include <memory>
#include <optional>

#include "glmrl/mdp.hpp"

namespace glmrl {

/// Finite MDP driven by a TabularModel and a per-(s, a) feature table.
///
/// Features are rows of `feature_table` indexed by s * A + a. With the
/// identity table this is the standard-basis tabular featurization.
class FiniteMdp final : public EpisodicMdp {
 public:
  /// Validates the model: probability rows on the simplex (1e-12), rewards
  /// in [0, 1] with every reachable return at most 1, feature rows in the
  /// unit ball. With `stochastic_rewards`, a step pays 1/H with probability
  /// H * R(s, a) and 0 otherwise, which needs R <= 1/H.
  FiniteMdp(TabularModel model, Matrix feature_table, bool stochastic_rewards = false);

  int horizon() const override { return model_.horizon; }
  int num_actions() const override { return model_.num_actions; }
  int feature_dim() const override { return static_cast<int>(features_.cols()); }
  int num_states() const { return model_.num_states; }

  State sample_initial(Rng& rng) const override;
  Transition step(int h, const State& state, int action, Rng& rng) const override;
  using EpisodicMdp::features;
  void features(const State& state, int action, Eigen::Ref<Vector> out) const override;

  const TabularModel* tabular_model() const override { return &model_; }
  const Matrix& feature_table() const { return features_; }
  bool stochastic_rewards() const { return stochastic_; }

  /// Same dynamics with rewards r -> scale * r, plus `final_offset` added at
  /// the last step; Q*_h becomes scale * Q*_h + final_offset.
  FiniteMdp with_affine_rewards(double scale, double final_offset) const;

 private:
  TabularModel model_;
  Matrix features_;
  bool stochastic_;
};

/// Identity feature table of size (S*A) x (S*A).
Matrix basis_features(int num_states, int num_actions);

/// Tabular MDP with e_{s,a} features.
std::shared_ptr<FiniteMdp> make_tabular(TabularModel model, bool stochastic_rewards = false);

/// Random tabular MDP: flat-Dirichlet transition rows and initial
/// distribution, per-step rewards uniform in [0, 1/H].
std::shared_ptr<FiniteMdp> make_tabular_random(int num_states, int num_actions, int horizon,
                                               Rng& rng, bool stochastic_rewards = false);

/// Linear MDP ingredients: P(s'|s,a) = <psi(s,a), mu(s')>, E[r|s,a] = <psi(s,a), eta>.
struct LinearMdpSpec {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  Matrix psi;  // (S*A) x d
  Matrix mu;   // S x d; row s' is mu(s')
  Vector eta;  // d
  Vector initial;
};

/// Builds the environment; throws ConstructionError when the spec does not
/// define valid transition rows or rewards in [0, 1/H].
std::shared_ptr<FiniteMdp> make_linear_mdp(const LinearMdpSpec& spec);

/// Random linear MDP: psi(s,a) and the columns of mu are drawn from flat
/// Dirichlet distributions, eta uniform in [0, 1/H]. Draws are rejected until
/// psi has full column rank d; gives up after 10^4 attempts.
std::shared_ptr<FiniteMdp> make_linear_mdp(int dim, int num_states, int num_actions, int horizon,
                                           Rng& rng);

/// Two-step environment with a continuum of initial states.
///
/// An episode draws alpha ~ U[0, 1]. Step 0 has features alpha e1 + (1 - alpha) e2
/// and pays 0; it moves deterministically to a stage-1 state whose features
/// are alpha * x for both actions, x = (0.1 / cap, 0.1 / cap), paying
/// 0.1 alpha / cap. It is not a linear MDP yet satisfies optimistic closure
/// for the identity link.
class CounterexampleMdp final : public EpisodicMdp {
 public:
  /// `bonus_cap` must keep x inside the unit ball (cap >= 0.1 * sqrt(2)).
  /// `fixed_alpha` pins alpha for deterministic tests.
  explicit CounterexampleMdp(double bonus_cap, std::optional<double> fixed_alpha = std::nullopt);

  int horizon() const override { return 2; }
  int num_actions() const override { return 2; }
  int feature_dim() const override { return 2; }

  State sample_initial(Rng& rng) const override;
  Transition step(int h, const State& state, int action, Rng& rng) const override;
  using EpisodicMdp::features;
  void features(const State& state, int action, Eigen::Ref<Vector> out) const override;

  OraclePtr closed_form_oracle() const override;

  double bonus_cap() const { return cap_; }
  Eigen::Vector2d x() const { return {0.1 / cap_, 0.1 / cap_}; }
  static State initial_state(double alpha) { return {0, alpha}; }

 private:
  double cap_;
  std::optional<double> fixed_alpha_;
};

std::shared_ptr<CounterexampleMdp> make_counterexample(double bonus_cap);

/// Deterministic chain of S states plus an absorbing dead state. Action 1
/// ("right") advances, action 0 ("left") drops into the dead state; the last
/// chain state is absorbing and pays 1 at the final step. Only S - 1
/// consecutive rights collect the reward, so a uniformly random policy earns
/// 2^-(S-1) per episode. Requires H >= S.
std::shared_ptr<FiniteMdp> make_chain(int num_states, int horizon);

}  // namespace glmrl
