#include "glmrl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glmrl/error.hpp"

namespace glmrl {

namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kBallTol = 1e-12;
constexpr int kLinearMdpAttempts = 10000;

Vector flat_dirichlet(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.exponential();
  return v / v.sum();
}

void check_distribution(const Vector& p, const std::string& what) {
  if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > kSimplexTol) {
    throw ConstructionError(what + " is not a probability vector");
  }
}

int sample_index(const Vector& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) return i;
  }
  // Rounding can leave u >= acc; fall back to the last state with mass.
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) {
    if (p(i) > 0.0) return i;
  }
  return 0;
}

void validate_model(const TabularModel& m) {
  if (m.num_states < 1 || m.num_actions < 1 || m.horizon < 1) {
    throw ParameterError("tabular model needs S, A, H >= 1");
  }
  if (static_cast<int>(m.transition.size()) != m.horizon ||
      static_cast<int>(m.mean_reward.size()) != m.horizon || m.initial.size() != m.num_states) {
    throw ParameterError("tabular model tables do not match (S, A, H)");
  }
  check_distribution(m.initial, "initial distribution");
  for (int h = 0; h < m.horizon; ++h) {
    if (static_cast<int>(m.transition[h].size()) != m.num_states * m.num_actions) {
      throw ParameterError("transition table has the wrong number of rows");
    }
    for (const auto& row : m.transition[h]) {
      if (row.size() != m.num_states) throw ParameterError("transition row has the wrong length");
      check_distribution(row, "transition row at step " + std::to_string(h));
    }
    const Matrix& r = m.mean_reward[h];
    if (r.rows() != m.num_states || r.cols() != m.num_actions) {
      throw ParameterError("reward table has the wrong shape");
    }
    if ((r.array() < 0.0).any() || (r.array() > 1.0).any()) {
      throw ConstructionError("rewards must lie in [0, 1]");
    }
  }
  if (max_reachable_return(m) > 1.0 + kSimplexTol) {
    throw ConstructionError("some reachable trajectory collects more than 1 in total reward");
  }
}

}  // namespace

FiniteMdp::FiniteMdp(TabularModel model, Matrix feature_table, bool stochastic_rewards)
    : model_(std::move(model)), features_(std::move(feature_table)), stochastic_(stochastic_rewards) {
  validate_model(model_);
  if (features_.rows() != model_.num_states * model_.num_actions || features_.cols() < 1) {
    throw ParameterError("feature table must have S*A rows");
  }
  if ((features_.rowwise().norm().array() > 1.0 + kBallTol).any()) {
    throw ParameterError("feature vectors must lie in the unit ball");
  }
  if (stochastic_) {
    const double cap = 1.0 / model_.horizon;
    for (const auto& r : model_.mean_reward) {
      if ((r.array() > cap + kSimplexTol).any()) {
        throw ParameterError("stochastic rewards need mean rewards <= 1/H");
      }
    }
  }
}

State FiniteMdp::sample_initial(Rng& rng) const { return {sample_index(model_.initial, rng), 0.0}; }

Transition FiniteMdp::step(int h, const State& state, int action, Rng& rng) const {
  const double mean = model_.mean_reward[h](state.index, action);
  double reward = mean;
  if (stochastic_) {
    const double cap = 1.0 / model_.horizon;
    reward = rng.bernoulli(mean / cap) ? cap : 0.0;
  }
  State next = state;
  if (h + 1 < model_.horizon) {
    next.index = sample_index(model_.next_state_distribution(h, state.index, action), rng);
  }
  return {next, reward};
}

void FiniteMdp::features(const State& state, int action, Eigen::Ref<Vector> out) const {
  out = features_.row(state.index * model_.num_actions + action).transpose();
}

FiniteMdp FiniteMdp::with_affine_rewards(double scale, double final_offset) const {
  TabularModel m = model_;
  for (auto& r : m.mean_reward) r *= scale;
  m.mean_reward.back().array() += final_offset;
  return FiniteMdp(std::move(m), features_, stochastic_);
}

Matrix basis_features(int num_states, int num_actions) {
  return Matrix::Identity(num_states * num_actions, num_states * num_actions);
}

std::shared_ptr<FiniteMdp> make_tabular(TabularModel model, bool stochastic_rewards) {
  Matrix phi = basis_features(model.num_states, model.num_actions);
  return std::make_shared<FiniteMdp>(std::move(model), std::move(phi), stochastic_rewards);
}

std::shared_ptr<FiniteMdp> make_tabular_random(int num_states, int num_actions, int horizon,
                                               Rng& rng, bool stochastic_rewards) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw ParameterError("make_tabular_random needs S, A, H >= 1");
  }
  TabularModel m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.horizon = horizon;
  m.initial = flat_dirichlet(num_states, rng);
  m.transition.resize(horizon);
  m.mean_reward.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    m.transition[h].reserve(num_states * num_actions);
    for (int i = 0; i < num_states * num_actions; ++i) {
      m.transition[h].push_back(flat_dirichlet(num_states, rng));
    }
    m.mean_reward[h].resize(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) m.mean_reward[h](s, a) = rng.uniform() / horizon;
    }
  }
  return make_tabular(std::move(m), stochastic_rewards);
}

std::shared_ptr<FiniteMdp> make_linear_mdp(const LinearMdpSpec& spec) {
  const int S = spec.num_states;
  const int A = spec.num_actions;
  const int H = spec.horizon;
  if (S < 1 || A < 1 || H < 1) throw ParameterError("linear MDP needs S, A, H >= 1");
  const auto d = spec.psi.cols();
  if (spec.psi.rows() != S * A || spec.mu.rows() != S || spec.mu.cols() != d ||
      spec.eta.size() != d) {
    throw ParameterError("linear MDP spec has inconsistent shapes");
  }
  TabularModel m;
  m.num_states = S;
  m.num_actions = A;
  m.horizon = H;
  m.initial = spec.initial;
  const Matrix probs = spec.psi * spec.mu.transpose();  // (S*A) x S
  const Vector rewards = spec.psi * spec.eta;
  for (int i = 0; i < S * A; ++i) {
    if ((probs.row(i).array() < -kSimplexTol).any() || (probs.row(i).array() > 1.0 + kSimplexTol).any() ||
        std::abs(probs.row(i).sum() - 1.0) > kSimplexTol) {
      throw ConstructionError("<psi(s,a), mu(.)> is not a probability vector");
    }
    if (rewards(i) < -kSimplexTol || rewards(i) > 1.0 / H + kSimplexTol) {
      throw ConstructionError("<psi(s,a), eta> is outside [0, 1/H]");
    }
  }
  std::vector<Vector> rows;
  rows.reserve(S * A);
  for (int i = 0; i < S * A; ++i) rows.push_back(probs.row(i).transpose().cwiseMax(0.0));
  m.transition.assign(H, rows);
  Matrix r(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) r(s, a) = std::clamp(rewards(s * A + a), 0.0, 1.0 / H);
  }
  m.mean_reward.assign(H, r);
  return std::make_shared<FiniteMdp>(std::move(m), spec.psi);
}

std::shared_ptr<FiniteMdp> make_linear_mdp(int dim, int num_states, int num_actions, int horizon,
                                           Rng& rng) {
  if (dim < 1 || num_states < 1 || num_actions < 1 || horizon < 1) {
    throw ParameterError("make_linear_mdp needs d, S, A, H >= 1");
  }
  for (int attempt = 0; attempt < kLinearMdpAttempts; ++attempt) {
    LinearMdpSpec spec;
    spec.num_states = num_states;
    spec.num_actions = num_actions;
    spec.horizon = horizon;
    spec.psi.resize(num_states * num_actions, dim);
    for (int i = 0; i < num_states * num_actions; ++i) {
      spec.psi.row(i) = flat_dirichlet(dim, rng).transpose();
    }
    spec.mu.resize(num_states, dim);
    for (int k = 0; k < dim; ++k) spec.mu.col(k) = flat_dirichlet(num_states, rng);
    spec.eta.resize(dim);
    for (int k = 0; k < dim; ++k) spec.eta(k) = rng.uniform() / horizon;
    spec.initial = flat_dirichlet(num_states, rng);

    Eigen::FullPivLU<Matrix> lu(spec.psi);
    lu.setThreshold(1e-8);
    if (lu.rank() < dim) continue;
    try {
      return make_linear_mdp(spec);
    } catch (const ConstructionError&) {
      continue;
    }
  }
  throw ConstructionError("no valid linear MDP with d = " + std::to_string(dim) +
                          " after 10000 attempts (is d <= S*A?)");
}

namespace {

class CounterexampleOracle final : public OptimalValues {
 public:
  CounterexampleOracle(double cap, std::optional<double> fixed_alpha)
      : cap_(cap), fixed_alpha_(fixed_alpha) {}

  // Both steps are worth the single stage-1 reward 0.1 alpha / cap.
  double q(int, const State& s, int) const override { return 0.1 * s.alpha / cap_; }
  double v_star() const override { return 0.1 * fixed_alpha_.value_or(0.5) / cap_; }

 private:
  double cap_;
  std::optional<double> fixed_alpha_;
};

}  // namespace

CounterexampleMdp::CounterexampleMdp(double bonus_cap, std::optional<double> fixed_alpha)
    : cap_(bonus_cap), fixed_alpha_(fixed_alpha) {
  if (!(bonus_cap > 0.0) || !std::isfinite(bonus_cap)) {
    throw ParameterError("counterexample bonus cap must be positive");
  }
  if (0.1 * std::sqrt(2.0) / bonus_cap > 1.0 + kBallTol) {
    throw ParameterError("counterexample bonus cap below 0.1*sqrt(2) puts features outside the unit ball");
  }
  if (fixed_alpha && (*fixed_alpha < 0.0 || *fixed_alpha > 1.0)) {
    throw ParameterError("alpha must lie in [0, 1]");
  }
}

State CounterexampleMdp::sample_initial(Rng& rng) const {
  return initial_state(fixed_alpha_ ? *fixed_alpha_ : rng.uniform());
}

Transition CounterexampleMdp::step(int h, const State& state, int, Rng&) const {
  if (h == 0) return {{1, state.alpha}, 0.0};
  return {state, 0.1 * state.alpha / cap_};
}

void CounterexampleMdp::features(const State& state, int, Eigen::Ref<Vector> out) const {
  if (state.index == 0) {
    out << state.alpha, 1.0 - state.alpha;
  } else {
    out = state.alpha * Vector(x());
  }
}

OraclePtr CounterexampleMdp::closed_form_oracle() const {
  return std::make_shared<CounterexampleOracle>(cap_, fixed_alpha_);
}

std::shared_ptr<CounterexampleMdp> make_counterexample(double bonus_cap) {
  return std::make_shared<CounterexampleMdp>(bonus_cap);
}

std::shared_ptr<FiniteMdp> make_chain(int num_states, int horizon) {
  if (num_states < 1) throw ParameterError("chain needs at least one state");
  if (horizon < num_states) throw ParameterError("chain needs H >= S");
  const int S = num_states + 1;  // plus the dead state
  const int dead = num_states;
  const int goal = num_states - 1;
  TabularModel m;
  m.num_states = S;
  m.num_actions = 2;
  m.horizon = horizon;
  m.initial = Vector::Unit(S, 0);
  std::vector<Vector> rows(S * 2, Vector::Zero(S));
  for (int s = 0; s < S; ++s) {
    int left = dead;
    int right = s + 1;
    if (s == goal || s == dead) left = right = s;
    rows[s * 2 + 0](left) = 1.0;
    rows[s * 2 + 1](right) = 1.0;
  }
  m.transition.assign(horizon, rows);
  m.mean_reward.assign(horizon, Matrix::Zero(S, 2));
  m.mean_reward.back().row(goal).setOnes();
  return make_tabular(std::move(m));
}

}  // namespace glmrl
