// Serial reference kernels vs their OpenMP versions.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "weaksde/analysis.hpp"
#include "weaksde/noise.hpp"
#include "weaksde/schemes.hpp"

using namespace weaksde;

namespace {

SimulationPlan plan(std::size_t n_paths) {
  return {builtin_sde(BuiltinSde::TanhSech), Scheme(SchemeKind::SkewedEM), 1.0 / 32, 1.0, n_paths, 7};
}

const TestFunction identity = [](std::span<const double> x) { return x[0]; };

void BM_simulate_reference(benchmark::State& state) {
  const auto p = plan(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::simulate_terminal(p, identity));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate_parallel(benchmark::State& state) {
  const auto p = plan(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_terminal(p, identity));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

const int kOrders[] = {1, 2, 3, 4};

void BM_moments_reference(benchmark::State& state) {
  const auto spec = NoiseSpec::skewed_reference();
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::verify_moments(spec, static_cast<std::size_t>(state.range(0)), kOrders, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_moments_parallel(benchmark::State& state) {
  const auto spec = NoiseSpec::skewed_reference();
  for (auto _ : state)
    benchmark::DoNotOptimize(verify_moments(spec, static_cast<std::size_t>(state.range(0)), kOrders, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_one_step_reference(benchmark::State& state) {
  const auto model = builtin_sde(BuiltinSde::LinearMultiplicative2DNoise);
  const Scheme scheme(SchemeKind::EM);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        reference::one_step_moments(scheme, model, model.x0, 0.1, static_cast<std::size_t>(state.range(0)), 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_one_step_parallel(benchmark::State& state) {
  const auto model = builtin_sde(BuiltinSde::LinearMultiplicative2DNoise);
  const Scheme scheme(SchemeKind::EM);
  for (auto _ : state)
    benchmark::DoNotOptimize(one_step_moments(scheme, model, model.x0, 0.1, static_cast<std::size_t>(state.range(0)), 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_simulate_reference)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_moments_reference)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_moments_parallel)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_one_step_reference)->Arg(1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_one_step_parallel)->Arg(1 << 18)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
