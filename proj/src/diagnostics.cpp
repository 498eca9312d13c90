#include "glmrl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "glmrl/error.hpp"

namespace glmrl {

namespace {

Vector uniform_in_ball(int dim, Rng& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  const double norm = v.norm();
  if (norm == 0.0) return v;
  const double radius = std::pow(rng.uniform(), 1.0 / dim);
  return v * (radius / norm);
}

}  // namespace

std::optional<OptimismCheck> check_optimism(std::span<const EpisodeRecord> trace, double tolerance) {
  OptimismCheck out;
  for (const auto& ep : trace) {
    for (const auto& st : ep.steps) {
      if (!st.q_star) return std::nullopt;
      ++out.checks;
      const double gap = *st.q_star - st.qbar;
      if (gap > tolerance) {
        ++out.violations;
        out.max_violation = std::max(out.max_violation, gap);
      }
    }
  }
  return out;
}

std::optional<OptimismCheck> check_optimism(std::span<const EpisodeRecord> trace,
                                            const OptimalValues& oracle, double tolerance) {
  OptimismCheck out;
  for (const auto& ep : trace) {
    for (int h = 0; h < static_cast<int>(ep.steps.size()); ++h) {
      const auto& st = ep.steps[h];
      ++out.checks;
      const double gap = oracle.q(h, st.state, st.action) - st.qbar;
      if (gap > tolerance) {
        ++out.violations;
        out.max_violation = std::max(out.max_violation, gap);
      }
    }
  }
  return out;
}

OptimismCheck check_optimism_all_pairs(const LsviAgent& agent, const FiniteMdp& env,
                                       const QTable& oracle, double tolerance) {
  OptimismCheck out;
  for (int h = 0; h < env.horizon(); ++h) {
    for (int s = 0; s < env.num_states(); ++s) {
      const Vector values = agent.action_values(h, State{s, 0.0});
      for (int a = 0; a < env.num_actions(); ++a) {
        ++out.checks;
        const double gap = oracle.q(h, s, a) - values(a);
        if (gap > tolerance) {
          ++out.violations;
          out.max_violation = std::max(out.max_violation, gap);
        }
      }
    }
  }
  return out;
}

PotentialSums elliptical_potential_sum(std::span<const EpisodeRecord> trace, int dim) {
  PotentialSums out;
  if (dim < 1) throw ParameterError("potential sum needs d >= 1");
  const double t = static_cast<double>(trace.size());
  out.bound = 2.0 * dim * std::log(1.0 + t / dim);
  if (trace.empty()) return out;
  out.per_step.assign(trace.front().steps.size(), 0.0);
  for (const auto& ep : trace) {
    for (std::size_t h = 0; h < ep.steps.size() && h < out.per_step.size(); ++h) {
      out.per_step[h] += ep.steps[h].bonus_sq;
    }
  }
  for (std::size_t h = 0; h < out.per_step.size(); ++h) {
    if (!(out.per_step[h] <= out.bound)) {
      throw InvariantBreach("elliptical potential at step " + std::to_string(h) + " is " +
                            std::to_string(out.per_step[h]) + " > bound " +
                            std::to_string(out.bound));
    }
  }
  return out;
}

SandwichCheck lemma_delta_check(const LinkSpec& link, int num_samples, Rng& rng, int dim,
                                double slack) {
  if (num_samples < 1) throw ParameterError("lemma_delta_check needs at least one sample");
  SandwichCheck out;
  out.samples = num_samples;
  out.worst_slack = -std::numeric_limits<double>::infinity();
  const double k2 = link.kappa * link.kappa;
  const double big_k2 = link.big_k * link.big_k;
  for (int i = 0; i < num_samples; ++i) {
    const Vector theta = uniform_in_ball(dim, rng);
    const Vector theta2 = uniform_in_ball(dim, rng);
    const Vector x = uniform_in_ball(dim, rng);
    const double inner = x.dot(theta2 - theta);
    const double df = eval_link(link, x.dot(theta2)) - eval_link(link, x.dot(theta));
    const double lower = k2 * inner * inner;
    const double middle = df * df;
    const double upper = big_k2 * (theta2 - theta).squaredNorm();
    const double excess = std::max(lower - middle, middle - upper);
    out.worst_slack = std::max(out.worst_slack, excess);
    if (excess > slack) ++out.violations;
  }
  if (out.violations > 0) {
    throw InvariantBreach("sandwich bound failed for link '" + link.name + "' on " +
                          std::to_string(out.violations) + " samples (worst excess " +
                          std::to_string(out.worst_slack) + ")");
  }
  return out;
}

double OptimisticFunction::operator()(const Eigen::Ref<const Vector>& phi) const {
  const double quad = std::max(0.0, phi.dot(a * phi));
  return std::min(1.0, phi.dot(theta) + gamma * std::sqrt(quad));
}

OptimisticFunction sample_optimistic_function(int dim, double bonus_cap, Rng& rng) {
  OptimisticFunction g;
  g.theta = uniform_in_ball(dim, rng);
  g.gamma = rng.uniform(0.0, bonus_cap);
  Matrix gauss(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) gauss(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix u = qr.householderQ();
  // Sign fix so U is Haar-distributed.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) u.col(j) *= -1.0;
  }
  Vector diag(dim);
  for (int i = 0; i < dim; ++i) diag(i) = rng.uniform();
  g.a = u.transpose() * diag.asDiagonal() * u;
  g.a = 0.5 * (g.a + g.a.transpose()).eval();
  return g;
}

ClosureFit counterexample_backup_fit(const CounterexampleMdp& env, const OptimisticFunction& g,
                                     int grid_size) {
  if (grid_size < 2) throw ParameterError("alpha grid needs at least two points");
  const int rows = grid_size * env.num_actions();
  Matrix phi(rows, env.feature_dim());
  Vector backup(rows);
  Rng unused(0);
  Vector next_phi(env.feature_dim());
  int r = 0;
  for (int i = 0; i < grid_size; ++i) {
    const double alpha = static_cast<double>(i) / (grid_size - 1);
    const State s = CounterexampleMdp::initial_state(alpha);
    for (int a = 0; a < env.num_actions(); ++a) {
      const Transition tr = env.step(0, s, a, unused);
      double best = -std::numeric_limits<double>::infinity();
      for (int a2 = 0; a2 < env.num_actions(); ++a2) {
        env.features(tr.next, a2, next_phi);
        best = std::max(best, g(next_phi));
      }
      phi.row(r) = env.features(s, a).transpose();
      backup(r) = tr.reward + best;
      ++r;
    }
  }
  ClosureFit out;
  out.weights = phi.colPivHouseholderQr().solve(backup);
  out.max_residual = (phi * out.weights - backup).cwiseAbs().maxCoeff();
  return out;
}

double closure_residual(const CounterexampleMdp& env, int num_test_functions, int grid_size, Rng& rng,
                        double tolerance) {
  double worst = 0.0;
  for (int i = 0; i < num_test_functions; ++i) {
    const OptimisticFunction g = sample_optimistic_function(env.feature_dim(), env.bonus_cap(), rng);
    worst = std::max(worst, counterexample_backup_fit(env, g, grid_size).max_residual);
  }
  if (worst > tolerance) {
    throw InvariantBreach("optimistic closure residual " + std::to_string(worst) + " exceeds " +
                          std::to_string(tolerance));
  }
  return worst;
}

DecompositionGap decomposition_gap(std::span<const EpisodeRecord> trace, double v_star) {
  DecompositionGap out;
  out.samples = static_cast<int>(trace.size());
  if (trace.empty()) return out;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& ep : trace) {
    double conf = 0.0;
    for (const auto& st : ep.steps) conf += st.conf;
    const double gap = (v_star - ep.reward) - conf;
    sum += gap;
    sum_sq += gap * gap;
  }
  const double n = static_cast<double>(trace.size());
  out.mean = sum / n;
  if (trace.size() > 1) {
    const double var = std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

DecompositionGap regret_decomposition_check(const EpisodicMdp& env, const AgentConfig& config,
                                            int episodes, int num_seeds) {
  if (num_seeds < 1) throw ParameterError("decomposition check needs at least one seed");
  const OraclePtr oracle = exact_q_values(env);
  std::vector<double> gaps(num_seeds);
  std::vector<std::exception_ptr> errors(num_seeds);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < num_seeds; ++s) {
    try {
      const RunResult run = run_lsvi_ucb(env, episodes, config, static_cast<std::uint64_t>(s));
      gaps[s] = decomposition_gap(run.trace, oracle->v_star()).mean;
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  DecompositionGap out;
  out.samples = num_seeds;
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= num_seeds;
  out.mean = mean;
  if (num_seeds > 1) {
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= (num_seeds - 1);
    out.std_error = std::sqrt(var / num_seeds);
  }
  return out;
}

DiagnosticsReport diagnose_trace(std::span<const EpisodeRecord> trace, int dim,
                                 std::optional<double> v_star) {
  DiagnosticsReport report;
  if (auto opt = check_optimism(trace)) {
    report.optimism_available = true;
    report.optimism_checks = opt->checks;
    report.optimism_violations = opt->violations;
    report.max_violation_magnitude = opt->max_violation;
  }
  const PotentialSums pot = elliptical_potential_sum(trace, dim);
  report.potential_sums = pot.per_step;
  report.potential_bound = pot.bound;
  if (v_star) report.decomposition = decomposition_gap(trace, *v_star);
  return report;
}

}  // namespace glmrl
