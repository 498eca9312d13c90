#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "glmrl/links.hpp"

namespace glmrl {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixRef = Eigen::Ref<const RowMatrix>;

namespace kernels {

/// Squared loss sum_i (y_i - f(<x_i, theta>))^2 and its gradient in theta.
struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// max_a min{1, f(<x_{i,a}, theta>) + gamma ||x_{i,a}||_{Lambda^-1}} per row
/// i, floored at 0. `drift_events` counts negative quadratic forms that were
/// clamped to zero.
struct OptimisticMax {
  Eigen::VectorXd values;
  std::uint64_t drift_events = 0;
};

// Row-block size for the parallel kernels. Fixed so that the floating-point
// reduction order does not depend on the thread count.
inline constexpr Eigen::Index kBlockRows = 256;

namespace serial {

LossGradient glm_loss_gradient(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& theta,
                               const LinkSpec& link);

OptimisticMax optimistic_max(std::span<const RowMatrixRef> action_features,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::MatrixXd& lambda_inv, double gamma,
                             const LinkSpec& link);

}  // namespace serial

namespace parallel {

/// Blocked OpenMP version; identical results for any number of threads.
LossGradient glm_loss_gradient(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& theta,
                               const LinkSpec& link);

OptimisticMax optimistic_max(std::span<const RowMatrixRef> action_features,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::MatrixXd& lambda_inv, double gamma,
                             const LinkSpec& link);

}  // namespace parallel

}  // namespace kernels
}  // namespace glmrl
