#include <benchmark/benchmark.h>

#include "cfm/models.hpp"
#include "cfm/random.hpp"
#include "cfm/solvers.hpp"
#include "cfm/testgen.hpp"

namespace {

cfm::ModelSpec bench_dantzig(cfm::Index m, cfm::Index n) {
  auto rng = cfm::make_rng(9);
  cfm::ModelSpec spec;
  spec.kind = cfm::ModelKind::Dantzig;
  Eigen::MatrixXd a = cfm::gaussian_matrix(m, n, rng) / std::sqrt(double(m));
  spec.A = cfm::make_dense(a);
  spec.y = cfm::SpaceElement::from_vector(a * cfm::gen_sparse_signal(n, n / 16, 20.0, 10));
  spec.delta = 0.1 * (a.transpose() * spec.y.data).lpNorm<Eigen::Infinity>();
  spec.mu = 0.25;
  return spec;
}

void BM_at_iterations(benchmark::State& state) {
  cfm::ModelSpec spec = bench_dantzig(64, state.range(0));
  cfm::CompositeDual cd = cfm::build(spec);
  cfm::SolverOptions o;
  o.max_iters = 100;
  o.tol = 0.0;
  o.trace_phi = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::solve(cd, o, cfm::SpaceElement::zeros(cd.domain())));
  }
  state.SetItemsProcessed(state.iterations() * o.max_iters);
}
BENCHMARK(BM_at_iterations)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_at_cached_iterations(benchmark::State& state) {
  cfm::ModelSpec spec = bench_dantzig(64, state.range(0));
  cfm::CompositeDual cd = cfm::build(spec);
  cfm::SolverOptions o;
  o.max_iters = 100;
  o.tol = 0.0;
  o.trace_phi = false;
  o.L0 = cd.lipschitz_bound();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfm::solve_at_cached(cd, o, cfm::SpaceElement::zeros(cd.domain())));
  }
  state.SetItemsProcessed(state.iterations() * o.max_iters);
}
BENCHMARK(BM_at_cached_iterations)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
