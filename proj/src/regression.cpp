#include "glmrl/regression.hpp"

#include <algorithm>
#include <cmath>

#include "glmrl/error.hpp"

namespace glmrl {

Eigen::VectorXd project_to_ball(const Eigen::VectorXd& theta, double radius) {
  const double norm = theta.norm();
  if (norm <= radius) return theta;
  return theta * (radius / norm);
}

double glm_objective(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Eigen::Ref<const Eigen::VectorXd>& theta, const LinkSpec& link) {
  return kernels::parallel::glm_loss_gradient(x, y, theta, link).loss;
}

Eigen::VectorXd solve_ball_constrained_ls(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moment,
                                          double ball_radius) {
  const Eigen::Index d = moment.size();
  if (d == 0) return Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& evals = eig.eigenvalues();
  const Eigen::MatrixXd& evecs = eig.eigenvectors();
  const double cutoff = 1e-12 * std::max(1.0, evals.cwiseAbs().maxCoeff()) * static_cast<double>(d);

  // Coordinates of the moment in the eigenbasis, restricted to range(G).
  Eigen::VectorXd c = evecs.transpose() * moment;
  Eigen::VectorXd e = evals;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (e(i) <= cutoff) {
      c(i) = 0.0;
      e(i) = 0.0;
    }
  }
  auto solution = [&](double lambda) {
    Eigen::VectorXd w(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double denom = e(i) + lambda;
      w(i) = denom > 0.0 ? c(i) / denom : 0.0;
    }
    return Eigen::VectorXd(evecs * w);
  };

  Eigen::VectorXd theta = solution(0.0);
  if (theta.norm() <= ball_radius) return theta;

  // ||theta(lambda)|| decreases from above B to 0; c.norm()/B is a safe upper end.
  double lo = 0.0;
  double hi = c.norm() / ball_radius;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (solution(mid).norm() > ball_radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return project_to_ball(solution(hi), ball_radius);
}

namespace {

FitResult fit_exact(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                    double radius) {
  FitResult out;
  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd moment = x.transpose() * y;
  out.params = {solve_ball_constrained_ls(gram, moment, radius), radius};
  // The quadratic actually minimized; equals glm_objective whenever |<x, theta>| <= 1.
  out.objective = (x * out.params.theta - y).squaredNorm();
  return out;
}

FitResult fit_projected_gradient(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const LinkSpec& link, double radius, const SolverOpts& opts,
                                 const std::optional<Eigen::VectorXd>& warm_start) {
  const Eigen::Index d = x.cols();
  Eigen::VectorXd theta = warm_start && warm_start->size() == d
                              ? project_to_ball(*warm_start, radius)
                              : Eigen::VectorXd::Zero(d);

  const Eigen::MatrixXd gram = x.transpose() * x;
  const double lambda_max =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double f_max = std::max(std::abs(link.eval(-1.0)), std::abs(link.eval(1.0)));
  const double resid_bound = y.cwiseAbs().maxCoeff() + f_max;
  const double lipschitz =
      2.0 * lambda_max * (link.big_k * link.big_k + link.big_m * resid_bound);

  FitResult out;
  out.params.ball_radius = radius;
  auto current = kernels::parallel::glm_loss_gradient(x, y, theta, link);
  out.params.theta = theta;
  out.objective = current.loss;
  if (!(lipschitz > 0.0)) return out;

  out.converged = false;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Eigen::VectorXd next = project_to_ball(theta - current.gradient / lipschitz, radius);
    const double moved = (next - theta).norm();
    theta = next;
    current = kernels::parallel::glm_loss_gradient(x, y, theta, link);
    out.iterations = it + 1;
    if (current.loss <= out.objective) {
      out.objective = current.loss;
      out.params.theta = theta;
    }
    if (moved <= opts.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

FitResult fit_constrained_glm(const RowMatrixRef& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const LinkSpec& link, double ball_radius, const SolverOpts& opts,
                              const std::optional<Eigen::VectorXd>& warm_start) {
  if (!(ball_radius > 0.0)) throw ParameterError("ball radius must be positive");
  if (x.rows() != y.size()) throw ParameterError("covariates and targets differ in length");
  if (!y.allFinite() || !x.allFinite()) throw InputDomainError("regression data is not finite");
  if (x.rows() == 0) {
    FitResult out;
    out.params = {Eigen::VectorXd::Zero(x.cols()), ball_radius};
    return out;
  }
  const bool exact = opts.method == SolverMethod::kExactQuadratic ||
                     (opts.method == SolverMethod::kAuto && link.is_identity);
  if (exact) {
    if (!link.is_identity) throw ParameterError("exact quadratic solver needs the identity link");
    return fit_exact(x, y, ball_radius);
  }
  return fit_projected_gradient(x, y, link, ball_radius, opts, warm_start);
}

CovarianceState::CovarianceState(int dim, int refresh_period)
    : lambda_(Eigen::MatrixXd::Identity(dim, dim)),
      lambda_inv_(Eigen::MatrixXd::Identity(dim, dim)),
      refresh_period_(refresh_period) {
  if (dim < 0) throw ParameterError("covariance dimension must be non-negative");
}

void CovarianceState::update(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != lambda_.rows()) throw ParameterError("covariate has the wrong dimension");
  if (!x.allFinite()) throw InputDomainError("covariate is not finite");
  lambda_.noalias() += x * x.transpose();
  ++count_;
  if (refresh_period_ > 0 && ++since_refresh_ >= refresh_period_) {
    since_refresh_ = 0;
    lambda_inv_ = lambda_.llt().solve(Eigen::MatrixXd::Identity(dim(), dim()));
  } else {
    const Eigen::VectorXd u = lambda_inv_ * x;
    lambda_inv_.noalias() -= (u * u.transpose()) / (1.0 + x.dot(u));
  }
  lambda_inv_ = 0.5 * (lambda_inv_ + lambda_inv_.transpose()).eval();
}

Eigen::MatrixXd CovarianceState::gram() const {
  return lambda_ - Eigen::MatrixXd::Identity(dim(), dim());
}

CovarianceState update_covariance(CovarianceState state, const Eigen::Ref<const Eigen::VectorXd>& x) {
  state.update(x);
  return state;
}

double mahalanobis_bonus(const CovarianceState& state, const Eigen::Ref<const Eigen::VectorXd>& phi,
                         std::uint64_t* drift_events) {
  double quad = phi.dot(state.lambda_inv() * phi);
  if (quad < 0.0) {
    if (drift_events) ++*drift_events;
    quad = 0.0;
  }
  return std::sqrt(quad);
}

}  // namespace glmrl
