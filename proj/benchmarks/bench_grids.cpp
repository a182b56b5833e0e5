#include "turnpike/analysis.hpp"

#include <benchmark/benchmark.h>

using namespace turnpike;

static void BM_ExponentialGrid(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(exponential_grid(10.0, n, 1.0)[n / 2]);
}
BENCHMARK(BM_ExponentialGrid)->Range(8, 4096);

static void BM_EllipticApply(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  const auto g = build_grid(nx, nx / 3 + 1, 3.0, 1.0, BoundaryKind::Neumann);
  const EllipticOperator a(g, 0.1);
  const Field v = Field::Random(g.dof_count());
  for (auto _ : state) benchmark::DoNotOptimize(a.apply(v).data());
  state.SetItemsProcessed(state.iterations() * g.dof_count());
}
BENCHMARK(BM_EllipticApply)->Arg(31)->Arg(121)->Arg(481);

// Time-space norm over a desk-size trajectory.
static void BM_ScaledNorm(benchmark::State& state) {
  const auto g = build_grid(31, 11, 3.0, 1.0, BoundaryKind::Dirichlet);
  const auto tg = uniform_grid(10.0, 64);
  const auto x = random_trajectory(64, g.dof_count(), 1);
  const auto s = ScalingFunction::turnpike(0.5, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(scaled_norm(x, s, 6.0, 6.0, g, tg));
}
BENCHMARK(BM_ScaledNorm);
