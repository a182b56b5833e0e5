#include "turnpike/extremal.hpp"

#include <benchmark/benchmark.h>

using namespace turnpike;

namespace {

Problem desk_problem(int nx, int ny) {
  OCPSpec s;
  s.cubic.e = 1.0;
  return Problem(s, build_grid(nx, ny, 3.0, 1.0, BoundaryKind::Dirichlet));
}

}  // namespace

// Linearized extremal system at the zero point: assembly only.
static void BM_AssembleKKT(benchmark::State& state) {
  const Problem p = desk_problem(31, 11);
  const int slices = static_cast<int>(state.range(0));
  const auto tg = uniform_grid(10.0, slices);
  const auto z = zero_extremal(p.dof_count(), slices);
  for (auto _ : state) {
    auto k = assemble_kkt(z, p, tg);
    benchmark::DoNotOptimize(k.matrix().nonZeros());
  }
  state.SetLabel(std::to_string(2 * p.dof_count() * slices) + " unknowns");
}
BENCHMARK(BM_AssembleKKT)->Arg(11)->Arg(41)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_FactorizeKKT(benchmark::State& state) {
  const Problem p = desk_problem(31, 11);
  const int slices = static_cast<int>(state.range(0));
  const auto tg = uniform_grid(10.0, slices);
  const auto z = zero_extremal(p.dof_count(), slices);
  for (auto _ : state) {
    state.PauseTiming();
    const auto k = assemble_kkt(z, p, tg);
    state.ResumeTiming();
    k.factorize();
  }
}
BENCHMARK(BM_FactorizeKKT)->Arg(11)->Arg(41)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_NewtonSolve(benchmark::State& state) {
  const Problem p = desk_problem(31, 11);
  const int slices = static_cast<int>(state.range(0));
  const auto tg = uniform_grid(10.0, slices);
  const auto eps = zero_perturbation(p.dof_count(), slices);
  int iterations = 0;
  for (auto _ : state) {
    const auto r = newton_solve(p, tg, eps, zero_extremal(p.dof_count(), slices));
    iterations = r.iterations;
  }
  state.counters["newton_iterations"] = iterations;
}
BENCHMARK(BM_NewtonSolve)->Arg(11)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
