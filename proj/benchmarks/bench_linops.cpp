#include <benchmark/benchmark.h>

#include "cfm/linops.hpp"
#include "cfm/random.hpp"

namespace {

void BM_dense_forward(benchmark::State& state) {
  auto rng = cfm::make_rng(5);
  const cfm::Index n = state.range(0);
  cfm::LinOp a = cfm::make_dense(cfm::gaussian_matrix(n / 4, n, rng));
  cfm::SpaceElement x = cfm::gaussian_element(a.input_space(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(a.forward(x));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_dense_forward)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

void BM_partial_dct_forward(benchmark::State& state) {
  auto rng = cfm::make_rng(6);
  const cfm::Index n = state.range(0);
  std::vector<cfm::Index> rows = cfm::sample_without_replacement(n, n / 4, rng);
  cfm::LinOp a = cfm::make_partial_dct(rows, n);
  cfm::SpaceElement x = cfm::gaussian_element(a.input_space(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(a.forward(x));
  }
}
BENCHMARK(BM_partial_dct_forward)->Arg(1024)->Arg(4096);

void BM_diff2d_roundtrip(benchmark::State& state) {
  auto rng = cfm::make_rng(7);
  const cfm::Index n = state.range(0);
  cfm::LinOp d = cfm::make_diff2d(n);
  cfm::SpaceElement x = cfm::gaussian_element(d.input_space(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(d.adjoint(d.forward(x)));
  }
}
BENCHMARK(BM_diff2d_roundtrip)->Arg(64)->Arg(128);

void BM_estimate_norm(benchmark::State& state) {
  auto rng = cfm::make_rng(8);
  cfm::LinOp a = cfm::make_dense(cfm::gaussian_matrix(128, 512, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::estimate_norm(a, 50, 1e-6));
  }
}
BENCHMARK(BM_estimate_norm);

}  // namespace
