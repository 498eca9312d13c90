#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "glmrl/kernels.hpp"

namespace glmrl::kernels::parallel {

namespace {

Eigen::Index num_blocks(Eigen::Index n) { return (n + kBlockRows - 1) / kBlockRows; }

}  // namespace

LossGradient glm_loss_gradient(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& theta,
                               const LinkSpec& link) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index blocks = num_blocks(n);
  std::vector<double> block_loss(blocks, 0.0);
  Eigen::MatrixXd block_grad = Eigen::MatrixXd::Zero(d, blocks);

#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlockRows;
    const Eigen::Index rows = std::min(kBlockRows, n - begin);
    const auto xb = x.middleRows(begin, rows);
    Eigen::VectorXd z = (xb * theta).cwiseMax(-1.0).cwiseMin(1.0);
    Eigen::VectorXd w(rows);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double resid = y(begin + i) - link.eval(z(i));
      loss += resid * resid;
      w(i) = -2.0 * resid * link.deriv(z(i));
    }
    block_loss[b] = loss;
    block_grad.col(b) = xb.transpose() * w;
  }

  LossGradient out;
  out.gradient = Eigen::VectorXd::Zero(d);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    out.loss += block_loss[b];
    out.gradient += block_grad.col(b);
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
  const Eigen::Index blocks = num_blocks(n);
  out.values = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  std::uint64_t drift = 0;

#pragma omp parallel for schedule(static) reduction(+ : drift) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlockRows;
    const Eigen::Index rows = std::min(kBlockRows, n - begin);
    for (const auto& feats : action_features) {
      const auto fb = feats.middleRows(begin, rows);
      const Eigen::VectorXd z = fb * theta;
      const RowMatrix scaled = fb * lambda_inv;
      const Eigen::VectorXd quad = scaled.cwiseProduct(fb).rowwise().sum();
      for (Eigen::Index i = 0; i < rows; ++i) {
        double qf = quad(i);
        if (qf < 0.0) {
          ++drift;
          qf = 0.0;
        }
        const double q = link.eval(std::clamp(z(i), -1.0, 1.0)) + gamma * std::sqrt(qf);
        double& slot = out.values(begin + i);
        slot = std::max(slot, std::clamp(q, 0.0, 1.0));
      }
    }
  }
  out.drift_events = drift;
  return out;
}

}  // namespace glmrl::kernels::parallel
