#include <benchmark/benchmark.h>

#include "cfm/prox.hpp"
#include "cfm/random.hpp"

namespace {

void BM_soft_threshold(benchmark::State& state) {
  auto rng = cfm::make_rng(1);
  Eigen::VectorXd x = cfm::gaussian_vector(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::soft_threshold(x, 0.5));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_soft_threshold)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_shrink_l2(benchmark::State& state) {
  auto rng = cfm::make_rng(2);
  Eigen::VectorXd x = cfm::gaussian_vector(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::shrink_l2(x, 0.5));
  }
}
BENCHMARK(BM_shrink_l2)->Arg(1024)->Arg(16384);

void BM_svt(benchmark::State& state) {
  auto rng = cfm::make_rng(3);
  const cfm::Index n = state.range(0);
  Eigen::MatrixXd x = cfm::gaussian_matrix(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::svt(x, 0.5));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_svt)->Arg(16)->Arg(32)->Arg(64);

void BM_project_soc(benchmark::State& state) {
  auto rng = cfm::make_rng(4);
  Eigen::VectorXd y = cfm::gaussian_vector(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::project_soc(y, 0.1));
  }
}
BENCHMARK(BM_project_soc)->Arg(4096);

}  // namespace
