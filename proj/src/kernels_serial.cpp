#include <algorithm>
#include <cmath>
#include <limits>

#include "glmrl/kernels.hpp"

namespace glmrl::kernels::serial {

LossGradient glm_loss_gradient(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& theta,
                               const LinkSpec& link) {
  LossGradient out;
  out.gradient = Eigen::VectorXd::Zero(theta.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double z = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) z += x(i, k) * theta(k);
    z = std::clamp(z, -1.0, 1.0);
    const double resid = y(i) - link.eval(z);
    out.loss += resid * resid;
    const double w = -2.0 * resid * link.deriv(z);
    for (Eigen::Index k = 0; k < x.cols(); ++k) out.gradient(k) += w * x(i, k);
  }
  return out;
}

OptimisticMax optimistic_max(std::span<const RowMatrixRef> action_features,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::MatrixXd& lambda_inv, double gamma,
                             const LinkSpec& link) {
  OptimisticMax out;
  if (action_features.empty()) return out;
  const Eigen::Index n = action_features.front().rows();
  const Eigen::Index d = theta.size();
  out.values = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  for (const auto& feats : action_features) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double z = 0.0;
      double quad = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        z += feats(i, k) * theta(k);
        double row = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) row += lambda_inv(k, j) * feats(i, j);
        quad += feats(i, k) * row;
      }
      if (quad < 0.0) {
        ++out.drift_events;
        quad = 0.0;
      }
      const double q = link.eval(std::clamp(z, -1.0, 1.0)) + gamma * std::sqrt(quad);
      out.values(i) = std::max(out.values(i), std::clamp(q, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace glmrl::kernels::serial
