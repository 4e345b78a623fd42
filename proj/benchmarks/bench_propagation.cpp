#include <benchmark/benchmark.h>

#include "adiabatic/propagation.hpp"
#include "adiabatic/spectral_model.hpp"

namespace {

using namespace adiabatic;

ContinuumModel model(std::size_t n) {
  return build_model(KGrid(1.0, 2.0, n), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                     FrameRotation::nearest_neighbor(n, AngleSchedule(AngleProfile::cubic, 0.4)));
}

void BM_PropagateEndpoint(benchmark::State& state) {
  const auto m = model(static_cast<std::size_t>(state.range(0)));
  PropagationConfig cfg;
  cfg.T = 100.0;
  cfg.steps = 4000;
  cfg.scheme = static_cast<Scheme>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(propagate_endpoint(m, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.steps));
}
BENCHMARK(BM_PropagateEndpoint)
    ->ArgsProduct({{16, 32, 64}, {static_cast<long>(Scheme::midpoint_exponential),
                                  static_cast<long>(Scheme::fourth_order_commutator_free)}})
    ->Unit(benchmark::kMillisecond);

void BM_Intertwiner(benchmark::State& state) {
  const auto m = model(16);
  const auto variant = state.range(0) ? GeneratorVariant::weyl_band(BandPartition(16, 2))
                                      : GeneratorVariant::kato_state();
  for (auto _ : state) benchmark::DoNotOptimize(intertwiner(m, variant, 4000));
}
BENCHMARK(BM_Intertwiner)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Frame(benchmark::State& state) {
  const auto m = model(static_cast<std::size_t>(state.range(0)));
  double s = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.frame(s));
    s = s < 1.0 ? s + 1e-3 : 0.0;
  }
}
BENCHMARK(BM_Frame)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
