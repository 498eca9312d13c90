#include <vector>

#include <benchmark/benchmark.h>

#include "glmrl/kernels.hpp"
#include "glmrl/rng.hpp"

using namespace glmrl;

namespace {

constexpr int kDim = 12;
constexpr int kActions = 4;

struct Fixture {
  RowMatrix x;
  Eigen::VectorXd y;
  Eigen::VectorXd theta;
  Eigen::MatrixXd lambda_inv;
  std::vector<RowMatrix> feats;
  std::vector<RowMatrixRef> refs;

  explicit Fixture(Eigen::Index n) {
    Rng rng(n);
    auto rows = [&] {
      RowMatrix m(n, kDim);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-0.25, 0.25);
      return m;
    };
    x = rows();
    y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = rng.uniform(0.0, 2.0);
    theta = Eigen::VectorXd::Constant(kDim, 0.1);
    lambda_inv = (Eigen::MatrixXd::Identity(kDim, kDim) + x.transpose() * x).inverse();
    for (int a = 0; a < kActions; ++a) feats.push_back(rows());
    for (const auto& m : feats) refs.emplace_back(m);
  }
};

template <bool Parallel>
void BM_LossGradient(benchmark::State& state) {
  const Fixture f(state.range(0));
  const auto link = logistic_link();
  for (auto _ : state) {
    auto out = Parallel ? kernels::parallel::glm_loss_gradient(f.x, f.y, f.theta, *link)
                        : kernels::serial::glm_loss_gradient(f.x, f.y, f.theta, *link);
    benchmark::DoNotOptimize(out.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_OptimisticMax(benchmark::State& state) {
  const Fixture f(state.range(0));
  const auto link = identity_link();
  for (auto _ : state) {
    auto out = Parallel ? kernels::parallel::optimistic_max(f.refs, f.theta, f.lambda_inv, 0.5, *link)
                        : kernels::serial::optimistic_max(f.refs, f.theta, f.lambda_inv, 0.5, *link);
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * kActions);
}

}  // namespace

BENCHMARK(BM_LossGradient<false>)->Name("loss_gradient/serial")->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_LossGradient<true>)->Name("loss_gradient/parallel")->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_OptimisticMax<false>)->Name("optimistic_max/serial")->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_OptimisticMax<true>)->Name("optimistic_max/parallel")->RangeMultiplier(10)->Range(1000, 100000);

BENCHMARK_MAIN();
