#include <cmath>

#include <doctest.h>

#include "glmrl/error.hpp"
#include "glmrl/regression.hpp"
#include "glmrl/rng.hpp"
#include "oracles.hpp"

using namespace glmrl;

namespace {

RowMatrix unit_ball_rows(int n, int d, Rng& rng) {
  RowMatrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x(i, k) = rng.normal();
    x.row(i) *= std::pow(rng.uniform(), 1.0 / d) / x.row(i).norm();
  }
  return x;
}

Eigen::VectorXd random_in_ball(int d, double radius, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int k = 0; k < d; ++k) v(k) = rng.normal();
  return v * (radius * std::pow(rng.uniform(), 1.0 / d) / v.norm());
}

SolverOpts pgd(int iters = 5000) {
  SolverOpts o;
  o.method = SolverMethod::kProjectedGradient;
  o.max_iters = iters;
  o.tolerance = 1e-12;
  return o;
}

}  // namespace

TEST_CASE("fit: single sample gives the minimal-norm solution") {
  RowMatrix x(1, 3);
  x << 1, 0, 0;
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.5);
  const auto exact = fit_constrained_glm(x, y, *identity_link(), 1.0);
  CHECK((exact.params.theta - Eigen::Vector3d(0.5, 0, 0)).norm() <= 1e-14);
  const auto grad = fit_constrained_glm(x, y, *identity_link(), 1.0, pgd());
  CHECK((grad.params.theta - Eigen::Vector3d(0.5, 0, 0)).norm() <= 1e-8);
}

TEST_CASE("fit: empty data gives zero") {
  const RowMatrix x(0, 4);
  const Eigen::VectorXd y(0);
  for (const auto& link : {identity_link(), logistic_link()}) {
    const auto fit = fit_constrained_glm(x, y, *link, 2.0);
    CHECK(fit.params.theta == Eigen::VectorXd::Zero(4));
    CHECK(fit.converged);
  }
}

TEST_CASE("fit: isotropic design projects radially") {
  RowMatrix x(6, 2);
  x << 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1;
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(6);
  const Eigen::Vector2d expected(1 / std::sqrt(2.0), 1 / std::sqrt(2.0));
  CHECK((fit_constrained_glm(x, y, *identity_link(), 1.0).params.theta - expected).norm() <= 1e-12);
  CHECK((fit_constrained_glm(x, y, *identity_link(), 1.0, pgd()).params.theta - expected).norm() <= 1e-8);
  // Grid search over the unit ball.
  double best = INFINITY;
  Eigen::Vector2d arg;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const Eigen::Vector2d t(-1 + i / 200.0, -1 + j / 200.0);
      if (t.norm() > 1) continue;
      const double obj = oracle::squared_loss(x, y, t);
      if (obj < best) {
        best = obj;
        arg = t;
      }
    }
  }
  CHECK((arg - expected).norm() <= 0.01);
}

TEST_CASE("fit: input validation") {
  RowMatrix x(2, 2);
  x << 1, 0, 0, 1;
  Eigen::VectorXd y(2);
  y << 0.2, NAN;
  CHECK_THROWS_AS(fit_constrained_glm(x, y, *identity_link(), 1.0), InputDomainError);
  CHECK_THROWS_AS(fit_constrained_glm(x, Eigen::VectorXd::Zero(3), *identity_link(), 1.0), ParameterError);
  CHECK_THROWS_AS(fit_constrained_glm(x, Eigen::VectorXd::Zero(2), *identity_link(), 0.0), ParameterError);
  SolverOpts exact;
  exact.method = SolverMethod::kExactQuadratic;
  CHECK_THROWS_AS(fit_constrained_glm(x, Eigen::VectorXd::Zero(2), *logistic_link(), 1.0, exact), ParameterError);
}

TEST_CASE("exact solver agrees with the FISTA oracle and the KKT certificate") {
  Rng rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + trial % 5;
    const int n = 1 + trial % 9;
    const RowMatrix x = unit_ball_rows(n, d, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(0.1, 2.0);
    const auto fit = fit_constrained_glm(x, y, *identity_link(), b);
    const Eigen::MatrixXd xd = x;
    const Eigen::VectorXd ref = oracle::fista_ball_ls(xd, y, b, 20000);
    CHECK(fit.params.theta.norm() <= b * (1 + 1e-12));
    CHECK(fit.objective == doctest::Approx(oracle::squared_loss(xd, y, fit.params.theta)).epsilon(1e-12));
    CHECK(fit.objective <= oracle::squared_loss(xd, y, ref) + 1e-9);
    CHECK(oracle::kkt_violation(xd, y, fit.params.theta, b) <= 1e-7);
  }
}

TEST_CASE("exact solver picks the minimal-norm solution when the design is rank deficient") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g(0, 0) = 2.0;
  const Eigen::VectorXd m = Eigen::Vector3d(1.0, 0.0, 0.0);
  const auto theta = solve_ball_constrained_ls(g, m, 5.0);
  CHECK((theta - Eigen::Vector3d(0.5, 0, 0)).norm() <= 1e-14);
  CHECK(solve_ball_constrained_ls(g, Eigen::Vector3d(4.0, 0.0, 0.0), 1.0)(0) == doctest::Approx(1.0));
}

TEST_CASE("projected gradient reaches the exact optimum for the identity link") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3;
    const RowMatrix x = unit_ball_rows(15, d, rng);
    Eigen::VectorXd y(15);
    for (int i = 0; i < 15; ++i) y(i) = rng.uniform(0.0, 1.0);
    const auto exact = fit_constrained_glm(x, y, *identity_link(), 1.0);
    const auto grad = fit_constrained_glm(x, y, *identity_link(), 1.0, pgd(20000));
    CHECK(grad.objective <= exact.objective + 1e-6);
  }
}

TEST_CASE("projected gradient beats random feasible points for the logistic link") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3;
    const RowMatrix x = unit_ball_rows(20, d, rng);
    const Eigen::VectorXd truth = random_in_ball(d, 1.0, rng);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = eval_link(*logistic_link(), x.row(i).dot(truth)) + 0.05 * rng.normal();
    const auto fit = fit_constrained_glm(x, y, *logistic_link(), 1.0, pgd(5000));
    for (int k = 0; k < 2000; ++k) {
      const Eigen::VectorXd t = random_in_ball(d, 1.0, rng);
      CHECK(fit.objective <= glm_objective(x, y, t, *logistic_link()));
    }
  }
}

TEST_CASE("projected gradient reports non-convergence without throwing") {
  Rng rng(13);
  const RowMatrix x = unit_ball_rows(30, 4, rng);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y(i) = rng.uniform();
  const auto fit = fit_constrained_glm(x, y, *logistic_link(), 1.0, pgd(1));
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 1);
}

TEST_CASE("project_to_ball") {
  CHECK(project_to_ball(Eigen::Vector2d(3, 4), 1.0).isApprox(Eigen::Vector2d(0.6, 0.8)));
  CHECK(project_to_ball(Eigen::Vector2d(0.3, 0.4), 1.0) == Eigen::Vector2d(0.3, 0.4));
}

TEST_CASE("update_covariance examples") {
  CovarianceState s(2);
  const auto a = update_covariance(s, Eigen::Vector2d(1, 0));
  CHECK(a.lambda() == Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix());
  CHECK(a.lambda_inv().isApprox(Eigen::Vector2d(0.5, 1).asDiagonal().toDenseMatrix(), 1e-15));
  CHECK(a.count() == 1);

  const Eigen::Vector2d x(0.6, 0.8);
  const auto b = update_covariance(s, x);
  const Eigen::MatrixXd direct = (Eigen::MatrixXd::Identity(2, 2) + x * x.transpose()).inverse();
  CHECK((b.lambda_inv() - direct).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(b.gram().isApprox(x * x.transpose()));
}

TEST_CASE("1000 Sherman-Morrison updates stay consistent with the direct inverse") {
  Rng rng(14);
  CovarianceState s(6, 0);  // no refresh: pure rank-one updates
  const RowMatrix x = unit_ball_rows(1000, 6, rng);
  for (int i = 0; i < 1000; ++i) s.update(x.row(i).transpose());
  CHECK((s.lambda_inv() * s.lambda() - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-8);
  CHECK((s.lambda_inv() - s.lambda().inverse()).norm() <= 1e-10);
  CHECK(s.count() == 1000);
}

TEST_CASE("covariance input validation") {
  CovarianceState s(2);
  CHECK_THROWS_AS(s.update(Eigen::Vector2d(NAN, 0)), InputDomainError);
  CHECK_THROWS_AS(s.update(Eigen::Vector3d(1, 0, 0)), ParameterError);
}

TEST_CASE("mahalanobis_bonus examples") {
  CovarianceState s(2);
  CHECK(mahalanobis_bonus(s, Eigen::Vector2d(1, 0)) == 1.0);
  for (int i = 0; i < 3; ++i) s.update(Eigen::Vector2d(1, 0));
  CHECK(s.lambda() == Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix());
  CHECK(mahalanobis_bonus(s, Eigen::Vector2d(1, 0)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mahalanobis_bonus matches a direct linear solve") {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 7;
    CovarianceState s(d);
    const RowMatrix x = unit_ball_rows(10 + trial, d, rng);
    for (int i = 0; i < x.rows(); ++i) s.update(x.row(i).transpose());
    Eigen::VectorXd phi(d);
    for (int k = 0; k < d; ++k) phi(k) = rng.normal();
    const Eigen::VectorXd z = s.lambda().partialPivLu().solve(phi);
    CHECK(mahalanobis_bonus(s, phi) == doctest::Approx(std::sqrt(phi.dot(z))).epsilon(1e-10));
  }
}
