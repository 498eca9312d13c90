#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "glmrl/kernels.hpp"
#include "glmrl/links.hpp"

namespace glmrl {

enum class SolverMethod {
  /// Exact quadratic solver for the identity link, projected gradient otherwise.
  kAuto,
  kProjectedGradient,
  kExactQuadratic,
};

struct SolverOpts {
  int max_iters = 500;
  /// Stop once an iteration moves theta by at most this much (Euclidean).
  double tolerance = 1e-8;
  /// Full re-inversion of Lambda every this many rank-one updates.
  int refresh_period = 1000;
  SolverMethod method = SolverMethod::kAuto;
};

struct GlmParams {
  Eigen::VectorXd theta;
  double ball_radius = 1.0;
};

struct FitResult {
  GlmParams params;
  bool converged = true;
  int iterations = 0;
  double objective = 0.0;
};

/// Euclidean projection onto {||theta|| <= radius}.
Eigen::VectorXd project_to_ball(const Eigen::VectorXd& theta, double radius);

/// sum_i (y_i - f(<x_i, theta>))^2 with the inner product clamped to [-1, 1].
double glm_objective(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Eigen::Ref<const Eigen::VectorXd>& theta, const LinkSpec& link);

/// argmin_{||theta|| <= B} sum_i (y_i - f(<x_i, theta>))^2.
///
/// Projected gradient descent with step 1/L, L = 2 lambda_max(X'X) (K^2 + M r)
/// and r bounding |y - f|, warm-started at `warm_start` (else 0). For the
/// identity link the default method instead solves the convex quadratic
/// exactly, returning the minimal-norm least-squares solution when it is
/// feasible. Empty data yields theta = 0. Non-convergence is reported in the
/// result, never thrown.
FitResult fit_constrained_glm(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const LinkSpec& link, double ball_radius,
                              const SolverOpts& opts = {},
                              const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Exact minimizer of theta' G theta - 2 b' theta over the radius-B ball for
/// PSD G (Gram matrix X'X, moment X'y): minimal-norm solution if feasible,
/// otherwise the boundary point (G + lambda I)^-1 b with lambda > 0 found by
/// bisection on the secular equation.
Eigen::VectorXd solve_ball_constrained_ls(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moment,
                                          double ball_radius);

/// Lambda = I + sum x x' together with its inverse maintained by
/// Sherman-Morrison updates and refreshed by full inversion periodically.
class CovarianceState {
 public:
  explicit CovarianceState(int dim = 0, int refresh_period = 1000);

  /// Absorbs one covariate. Throws InputDomainError for non-finite input.
  void update(const Eigen::Ref<const Eigen::VectorXd>& x);

  int dim() const { return static_cast<int>(lambda_.rows()); }
  const Eigen::MatrixXd& lambda() const { return lambda_; }
  const Eigen::MatrixXd& lambda_inv() const { return lambda_inv_; }
  std::int64_t count() const { return count_; }
  /// Gram matrix sum x x' (Lambda minus the identity).
  Eigen::MatrixXd gram() const;

 private:
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd lambda_inv_;
  std::int64_t count_ = 0;
  int refresh_period_;
  int since_refresh_ = 0;
};

CovarianceState update_covariance(CovarianceState state, const Eigen::Ref<const Eigen::VectorXd>& x);

/// sqrt(phi' Lambda^-1 phi). A negative quadratic form (rounding) is clamped
/// to 0 and counted in `drift_events` when given.
double mahalanobis_bonus(const CovarianceState& state, const Eigen::Ref<const Eigen::VectorXd>& phi,
                         std::uint64_t* drift_events = nullptr);

}  // namespace glmrl
