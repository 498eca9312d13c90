#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glmrl/links.hpp"
#include "glmrl/mdp.hpp"
#include "glmrl/regression.hpp"

namespace glmrl {

/// Inputs of the confidence-width formula.
struct GammaParams {
  double scale_c = 1.0;
  /// Bonus cap Gamma of the optimistic class.
  double bonus_cap = 1.0;
  int dim = 1;
  int episodes = 1;
  int horizon = 1;
  double kappa = 1.0;
  double big_k = 1.0;
  double big_m = 0.0;
};

/// gamma = C K / kappa * sqrt(1 + M + K + d^2 ln((1 + K + Gamma) T H)).
double compute_gamma(const GammaParams& p);

/// Fills the link constants and, when no cap is given, sets Gamma to
/// compute_gamma evaluated with Gamma = 1 inside the logarithm.
GammaParams resolve_gamma_params(double scale_c, std::optional<double> bonus_cap, int dim,
                                 int episodes, int horizon, const LinkSpec& link);

/// Bonus actually used: compute_gamma(p) capped at p.bonus_cap.
double effective_gamma(const GammaParams& p);

/// Q(s, a) = min{1, f(<phi, theta>) + gamma ||phi||_{Lambda^-1}}, floored at 0.
/// A default-constructed (unfitted) estimate is identically 1.
class OptimisticQ {
 public:
  OptimisticQ() = default;
  OptimisticQ(GlmParams theta_hat, double gamma, CovarianceState cov, LinkPtr link);

  double eval(const Eigen::Ref<const Vector>& phi, std::uint64_t* drift_events = nullptr) const;

  bool fitted() const { return link_ != nullptr; }
  const GlmParams& theta_hat() const { return theta_hat_; }
  double gamma() const { return gamma_; }
  const CovarianceState& cov() const { return cov_; }
  const LinkPtr& link() const { return link_; }

 private:
  GlmParams theta_hat_;
  double gamma_ = 0.0;
  CovarianceState cov_;
  LinkPtr link_;
};

double optimistic_q_eval(const OptimisticQ& q, const Eigen::Ref<const Vector>& phi);

struct AgentConfig {
  LinkPtr link;
  double gamma_scale = 1.0;
  std::optional<double> bonus_cap;
  /// Parameter-ball radius B.
  double ball_radius = 1.0;
  SolverOpts solver;
  /// Refit every `epoch_length` episodes (1 = every episode).
  int epoch_length = 1;
  /// Drop the optimism bonus (gamma = 0) and act epsilon-greedily.
  bool greedy_baseline = false;
  double epsilon = 0.1;
};

/// What the agent saw at one step of an episode, measured with the
/// estimates it acted on (before this episode's update).
struct StepRecord {
  State state;
  int action = 0;
  double reward = 0.0;
  /// Q̄_{h,t-1}(s_h, a_h)
  double qbar = 1.0;
  /// ||phi(s_h, a_h)||^2 under Lambda_{h,t-1}^-1
  double bonus_sq = 0.0;
  /// gamma ||phi(s_h, a_h)||_{Lambda_{h,t-1}^-1}
  double conf = 0.0;
  /// Q*_h(s_h, a_h) when an oracle is available.
  std::optional<double> q_star;
};

struct EpisodeRecord {
  int episode = 0;
  double reward = 0.0;
  double bonus_sum = 0.0;
  bool solver_converged = true;
  std::vector<StepRecord> steps;
};

/// LSVI-UCB with generalized linear function approximation.
///
/// Holds, for every step h, the replayed covariates and per-action features
/// of all episodes so far, the covariance Lambda_h and the current optimistic
/// estimate. Each call to `observe` runs the backward sweep h = H..1 using
/// the freshly refitted estimate at h + 1 for the regression targets at h.
class LsviAgent {
 public:
  LsviAgent(const EpisodicMdp& env, AgentConfig config, int total_episodes);

  int horizon() const { return horizon_; }
  double gamma() const { return gamma_; }
  const GammaParams& gamma_params() const { return gamma_params_; }
  int episodes_seen() const { return episodes_; }
  const OptimisticQ& q(int h) const { return q_[h]; }
  const CovarianceState& covariance(int h) const { return cov_[h]; }
  const AgentConfig& config() const { return config_; }

  /// Optimistic values of every action at (h, state).
  Vector action_values(int h, const State& state) const;
  /// argmax_a Q̄_h(state, a); ties go to the lowest index.
  int greedy_action(int h, const State& state) const;
  /// Greedy action, or a uniform one with probability epsilon for the
  /// greedy baseline.
  int act(int h, const State& state, Rng& rng) const;

  /// Backward update with a new trajectory. Returns the per-step record
  /// measured before the update.
  EpisodeRecord observe(const Trajectory& traj);

  /// Covariates phi(s_{h,tau}, a_{h,tau}) of all episodes so far.
  RowMatrix covariates(int h) const;
  /// Regression targets at step h under the current estimates at h + 1.
  Vector targets(int h) const;

  std::uint64_t drift_events() const { return drift_events_; }
  std::int64_t nonconverged_fits() const { return nonconverged_fits_; }
  std::int64_t total_fits() const { return total_fits_; }

 private:
  Eigen::Map<const RowMatrix> rows(const std::vector<double>& buffer) const;
  kernels::OptimisticMax continuation(int h) const;
  bool refit(int h);

  const EpisodicMdp& env_;
  AgentConfig config_;
  int horizon_;
  int num_actions_;
  int dim_;
  GammaParams gamma_params_;
  double gamma_;
  int episodes_ = 0;

  std::vector<OptimisticQ> q_;
  std::vector<CovarianceState> cov_;
  // Row-major replay buffers, one row per past episode.
  std::vector<std::vector<double>> covariates_;                    // [h]
  std::vector<std::vector<std::vector<double>>> action_features_;  // [h][a]
  std::vector<std::vector<double>> rewards_;                       // [h]

  std::uint64_t drift_events_ = 0;
  std::int64_t nonconverged_fits_ = 0;
  std::int64_t total_fits_ = 0;
};

/// Free-function form of LsviAgent::observe.
EpisodeRecord backward_update(LsviAgent& agent, const Trajectory& traj);

enum class AgentKind { kLsviUcb, kRandom, kEpsGreedy };

std::string agent_name(AgentKind kind);
AgentKind agent_kind_by_name(const std::string& name);

struct RunMetadata {
  std::string agent;
  std::uint64_t seed = 0;
  int episodes = 0;
  double gamma = 0.0;
  double bonus_cap = 0.0;
  std::int64_t solver_fits = 0;
  std::int64_t solver_nonconverged = 0;
  std::int64_t optimism_checks = 0;
  std::int64_t optimism_violations = 0;
  std::uint64_t drift_events = 0;
  double wall_clock_seconds = 0.0;
};

struct RunResult {
  RegretLog log;
  RunMetadata metadata;
  std::vector<EpisodeRecord> trace;
};

/// Runs T episodes of act / collect / update. Episode t draws its randomness
/// from Rng(seed).child(t). Regret is measured against the exact V* when the
/// environment has an oracle; otherwise only rewards are logged.
RunResult run_agent(const EpisodicMdp& env, AgentKind kind, int episodes, const AgentConfig& config,
                    std::uint64_t seed);

/// LSVI-UCB run (AgentKind::kLsviUcb).
RunResult run_lsvi_ucb(const EpisodicMdp& env, int episodes, const AgentConfig& config,
                       std::uint64_t seed);

}  // namespace glmrl
