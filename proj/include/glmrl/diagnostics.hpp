#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "glmrl/agent.hpp"
#include "glmrl/environments.hpp"
#include "glmrl/links.hpp"

namespace glmrl {

struct OptimismCheck {
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  double max_violation = 0.0;

  double violation_rate() const {
    return checks > 0 ? static_cast<double>(violations) / static_cast<double>(checks) : 0.0;
  }
};

/// Compares Q̄_{h,t-1} with Q*_h at every visited (t, h, s, a) of a trace.
/// Returns nullopt when the trace carries no oracle values.
std::optional<OptimismCheck> check_optimism(std::span<const EpisodeRecord> trace,
                                            double tolerance = 1e-9);

/// Recomputes Q* from the oracle instead of trusting the stored values.
std::optional<OptimismCheck> check_optimism(std::span<const EpisodeRecord> trace,
                                            const OptimalValues& oracle, double tolerance = 1e-9);

/// Exhaustive version for tabular environments: every (h, s, a) of the
/// agent's current estimates against Q*.
OptimismCheck check_optimism_all_pairs(const LsviAgent& agent, const FiniteMdp& env,
                                       const QTable& oracle, double tolerance = 1e-9);

struct PotentialSums {
  std::vector<double> per_step;
  double bound = 0.0;
};

/// sum_t ||phi(s_{h,t}, a_{h,t})||^2_{Lambda_{h,t-1}^-1} for every h, and the
/// bound 2 d ln(1 + T / d). Throws InvariantBreach when any sum exceeds it.
PotentialSums elliptical_potential_sum(std::span<const EpisodeRecord> trace, int dim);

struct SandwichCheck {
  int samples = 0;
  int violations = 0;
  /// Largest amount by which either inequality failed (<= 0 means it held everywhere).
  double worst_slack = 0.0;
};

/// Samples (theta, theta', x) uniformly in the unit ball of R^dim and checks
/// kappa^2 <x, theta' - theta>^2 <= (f(<x, theta'>) - f(<x, theta>))^2 <= K^2 ||theta' - theta||^2.
/// Throws InvariantBreach if any violation exceeds `slack`.
SandwichCheck lemma_delta_check(const LinkSpec& link, int num_samples, Rng& rng, int dim = 5,
                                double slack = 1e-10);

/// A member of the optimistic class: min{1, <phi, theta> + gamma ||phi||_A}.
struct OptimisticFunction {
  Vector theta;
  double gamma = 0.0;
  Matrix a;

  double operator()(const Eigen::Ref<const Vector>& phi) const;
};

/// theta uniform in the unit ball, gamma uniform in [0, cap], A = U' D U
/// with Haar-random orthogonal U and D uniform in [0, 1]^dim.
OptimisticFunction sample_optimistic_function(int dim, double bonus_cap, Rng& rng);

struct ClosureFit {
  /// Least-squares weight w with T_1(g)(s, a) ~ <phi(s, a), w>.
  Vector weights;
  double max_residual = 0.0;
};

/// Exact first-step Bellman backup of g on the counterexample, evaluated for
/// both actions on an alpha grid of `grid_size` points in [0, 1], and its
/// best linear fit in the step-0 features.
ClosureFit counterexample_backup_fit(const CounterexampleMdp& env, const OptimisticFunction& g,
                                     int grid_size);

/// Max linear-fit residual over `num_test_functions` random g. Throws
/// InvariantBreach above `tolerance`.
double closure_residual(const CounterexampleMdp& env, int num_test_functions, int grid_size, Rng& rng,
                        double tolerance = 1e-9);

struct DecompositionGap {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// mean over episodes of (V* - episode reward) - sum_h conf_{h,t-1} for one
/// trace; standard error over episodes.
DecompositionGap decomposition_gap(std::span<const EpisodeRecord> trace, double v_star);

/// Averages the per-seed gap over seeds 0..num_seeds-1; the standard error
/// is taken across seeds. Throws UnsupportedOracle without an oracle.
DecompositionGap regret_decomposition_check(const EpisodicMdp& env, const AgentConfig& config,
                                            int episodes, int num_seeds);

struct DiagnosticsReport {
  std::int64_t optimism_checks = 0;
  std::int64_t optimism_violations = 0;
  double max_violation_magnitude = 0.0;
  bool optimism_available = false;
  std::vector<double> potential_sums;
  double potential_bound = 0.0;
  std::optional<double> closure_max_residual;
  std::optional<DecompositionGap> decomposition;
};

/// Report for one LSVI-UCB trace. `v_star` enables the decomposition gap.
DiagnosticsReport diagnose_trace(std::span<const EpisodeRecord> trace, int dim,
                                 std::optional<double> v_star);

}  // namespace glmrl
