#include <cmath>

#include <doctest.h>

#include "glmrl/environments.hpp"
#include "glmrl/error.hpp"
#include "oracles.hpp"

using namespace glmrl;

namespace {

void check_simplex_rows(const TabularModel& m) {
  CHECK(std::abs(m.initial.sum() - 1.0) <= 1e-12);
  for (int h = 0; h < m.horizon; ++h) {
    for (const auto& row : m.transition[h]) {
      CHECK(std::abs(row.sum() - 1.0) <= 1e-12);
      CHECK(row.minCoeff() >= 0.0);
    }
  }
}

}  // namespace

TEST_CASE("make_tabular_random with no choices") {
  Rng rng(1);
  const auto env = make_tabular_random(1, 1, 2, rng);
  const auto& m = *env->tabular_model();
  const double v = m.mean_reward[0](0, 0) + m.mean_reward[1](0, 0);
  CHECK(QTable(m).v_star() == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("make_tabular_random rows are on the simplex") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const auto env = make_tabular_random(1 + seed % 5, 1 + seed % 3, 1 + seed % 4, rng);
    check_simplex_rows(*env->tabular_model());
    CHECK(max_reachable_return(*env->tabular_model()) <= 1.0);
  }
}

TEST_CASE("make_tabular_random S=3 A=2 H=3 seed 7 against policy enumeration") {
  Rng rng(7);
  const auto env = make_tabular_random(3, 2, 3, rng);
  const auto& m = *env->tabular_model();
  CHECK(QTable(m).v_star() == doctest::Approx(oracle::brute_force_v_star(m)).epsilon(1e-13));
}

TEST_CASE("make_tabular_random rejects bad sizes") {
  Rng rng(0);
  CHECK_THROWS_AS(make_tabular_random(0, 2, 2, rng), ParameterError);
  CHECK_THROWS_AS(make_tabular_random(2, 2, 0, rng), ParameterError);
}

TEST_CASE("FiniteMdp validation") {
  Rng rng(2);
  const auto env = make_tabular_random(2, 2, 2, rng);
  SUBCASE("transition row off the simplex") {
    TabularModel m = *env->tabular_model();
    m.transition[1][3](0) += 1e-9;
    CHECK_THROWS_AS(make_tabular(m), ConstructionError);
  }
  SUBCASE("returns above 1") {
    TabularModel m = *env->tabular_model();
    m.mean_reward[0](0, 0) = 0.9;
    m.mean_reward[1].setConstant(0.9);
    CHECK_THROWS_AS(make_tabular(m), ConstructionError);
  }
  SUBCASE("negative reward") {
    TabularModel m = *env->tabular_model();
    m.mean_reward[0](1, 1) = -0.1;
    CHECK_THROWS_AS(make_tabular(m), ConstructionError);
  }
  SUBCASE("features outside the unit ball") {
    Matrix phi = basis_features(2, 2) * 1.01;
    CHECK_THROWS_AS(FiniteMdp(*env->tabular_model(), phi), ParameterError);
  }
}

TEST_CASE("stochastic rewards keep the mean") {
  Rng build(4);
  const auto env = make_tabular_random(2, 2, 4, build, true);
  const auto& m = *env->tabular_model();
  const int n = 40000;
  Rng rng(9);
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = env->step(0, {1, 0.0}, 0, rng).reward;
    CHECK((r == 0.0 || r == 0.25));
    sum += r;
    sq += r * r;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - m.mean_reward[0](1, 0)) <= 5 * se);
}

TEST_CASE("make_linear_mdp rows sum to one") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto env = make_linear_mdp(3 + seed % 4, 4, 2, 3, rng);
    CHECK(env->feature_dim() == 3 + static_cast<int>(seed % 4));
    check_simplex_rows(*env->tabular_model());
  }
}

TEST_CASE("make_linear_mdp with basis psi is tabular") {
  const int S = 3;
  const int A = 2;
  Rng rng(8);
  LinearMdpSpec spec;
  spec.num_states = S;
  spec.num_actions = A;
  spec.horizon = 2;
  spec.psi = Matrix::Identity(S * A, S * A);
  spec.mu = Matrix::Zero(S, S * A);
  for (int k = 0; k < S * A; ++k) {
    for (int s = 0; s < S; ++s) spec.mu(s, k) = rng.exponential();
    spec.mu.col(k) /= spec.mu.col(k).sum();
  }
  spec.eta = Vector::LinSpaced(S * A, 0.0, 0.5);
  spec.initial = Vector::Constant(S, 1.0 / S);
  const auto env = make_linear_mdp(spec);
  const auto& m = *env->tabular_model();
  CHECK(env->feature_table() == basis_features(S, A));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      CHECK((m.next_state_distribution(0, s, a) - spec.mu.col(s * A + a)).norm() <= 1e-15);
      CHECK(m.mean_reward[0](s, a) == spec.eta(s * A + a));
    }
  }
}

TEST_CASE("make_linear_mdp rejects invalid specs") {
  LinearMdpSpec spec;
  spec.num_states = 2;
  spec.num_actions = 1;
  spec.horizon = 1;
  spec.psi = Matrix::Identity(2, 2);
  spec.mu = Matrix::Constant(2, 2, 0.7);
  spec.eta = Vector::Constant(2, 0.1);
  spec.initial = Vector::Constant(2, 0.5);
  CHECK_THROWS_AS(make_linear_mdp(spec), ConstructionError);
  spec.mu.setConstant(0.5);
  spec.eta(0) = 2.0;
  CHECK_THROWS_AS(make_linear_mdp(spec), ConstructionError);
  spec.eta(0) = 0.5;
  CHECK_NOTHROW(make_linear_mdp(spec));
  Rng rng(0);
  CHECK_THROWS_AS(make_linear_mdp(5, 2, 1, 2, rng), ConstructionError);
}

TEST_CASE("linear MDP backups of clipped functions are linear in psi") {
  Rng rng(21);
  const auto env = make_linear_mdp(4, 5, 3, 3, rng);
  const auto& m = *env->tabular_model();
  const Matrix& psi = env->feature_table();
  for (int trial = 0; trial < 20; ++trial) {
    Matrix g(m.num_states, m.num_actions);
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a) g(s, a) = std::min(1.0, 1.5 * rng.uniform());
    const Matrix backup = bellman_backup(m, 0, g);
    Vector target(m.num_states * m.num_actions);
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a) target(s * m.num_actions + a) = backup(s, a);
    const Vector w = psi.colPivHouseholderQr().solve(target);
    CHECK((psi * w - target).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("counterexample construction") {
  const CounterexampleMdp cx(1.0);
  CHECK(cx.x()(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(cx.x()(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(CounterexampleMdp(4.0).x()(0) == doctest::Approx(0.025).epsilon(1e-15));

  Rng rng(0);
  const CounterexampleMdp zero(1.0, 0.0);
  const auto t0 = rollout_episode(zero, [](int, const State&) { return 0; }, rng);
  for (int a = 0; a < 2; ++a) CHECK(zero.features(t0.steps[1].state, a).norm() == 0.0);
  CHECK(t0.total_reward() == 0.0);

  for (double cap : {0.5, 1.0, 3.0}) {
    const CounterexampleMdp one(cap, 1.0);
    for (int a = 0; a < 2; ++a) {
      const auto t = rollout_episode(one, [a](int, const State&) { return a; }, rng);
      CHECK(t.total_reward() == doctest::Approx(0.1 / cap).epsilon(1e-15));
    }
  }
}

TEST_CASE("counterexample features stay in the unit ball") {
  Rng rng(5);
  const CounterexampleMdp cx(0.1 * std::sqrt(2.0));
  for (int i = 0; i < 1000; ++i) {
    const auto t = rollout_episode(cx, [](int, const State&) { return 1; }, rng);
    for (const auto& st : t.steps) CHECK(cx.features(st.state, st.action).norm() <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(CounterexampleMdp(0.1), ParameterError);
  CHECK_THROWS_AS(CounterexampleMdp(0.0), ParameterError);
  CHECK_THROWS_AS(CounterexampleMdp(1.0, 1.5), ParameterError);
}

TEST_CASE("chain: random policy earns 2^-(S-1)") {
  for (int S : {2, 3}) {
    const auto env = make_chain(S, 3);
    const auto& m = *env->tabular_model();
    double sum = 0.0;
    int count = 0;
    oracle::enumerate_policies(m, [&](const auto& pi) {
      sum += oracle::forward_value(m, pi, 0, m.initial);
      ++count;
    });
    CHECK(sum / count == doctest::Approx(std::ldexp(1.0, -(S - 1))).epsilon(1e-14));
  }
}

TEST_CASE("chain S=4 H=6: Monte-Carlo random return") {
  const auto env = make_chain(4, 6);
  Rng rng(17);
  const int n = 20000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = rollout_episode(*env, [&rng](int, const State&) { return rng.uniform_int(2); }, rng)
                         .total_reward();
    sum += r;
    sq += r * r;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.125) <= 5 * se);
}

TEST_CASE("chain: always right collects 1 and V* = 1") {
  const auto env = make_chain(4, 6);
  Rng rng(0);
  CHECK(rollout_episode(*env, [](int, const State&) { return 1; }, rng).total_reward() == 1.0);
  CHECK(rollout_episode(*env, [](int, const State&) { return 0; }, rng).total_reward() == 0.0);
  CHECK(QTable(*env->tabular_model()).v_star() == 1.0);
  CHECK(env->feature_dim() == 10);
  CHECK_THROWS_AS(make_chain(5, 4), ParameterError);
}
