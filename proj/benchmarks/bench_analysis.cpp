#include <benchmark/benchmark.h>

#include "adiabatic/analysis.hpp"
#include "adiabatic/spectral_model.hpp"

namespace {

using namespace adiabatic;

ContinuumModel default_model() {
  return build_model(KGrid(1.0, 2.0, 16), DispersionSchedule::linear({1.0, 1.0, 0.0, 0.0}),
                     FrameRotation::nearest_neighbor(16, AngleSchedule(AngleProfile::cubic, 0.4)));
}

void BM_TransitionAmplitude(benchmark::State& state) {
  const auto m = default_model();
  const double T = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(transition_amplitude(m, GeneratorVariant::kato_state(), 7, 8, T, 1.0));
  }
}
BENCHMARK(BM_TransitionAmplitude)->RangeMultiplier(4)->Range(100, 6400);

void BM_FirstOrderLeakage(benchmark::State& state) {
  const auto m = default_model();
  const BandPartition bands(16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(leakage_first_order(m, bands, 7, 800.0));
}
BENCHMARK(BM_FirstOrderLeakage)->Unit(benchmark::kMicrosecond);

void BM_Criterion(benchmark::State& state) {
  const auto m = default_model();
  const BandPartition bands(16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(criterion(m, bands, 7, 100.0, 101, 0.1));
}
BENCHMARK(BM_Criterion)->Unit(benchmark::kMicrosecond);

void BM_ConvergenceStudy(benchmark::State& state) {
  const auto m = default_model();
  const BandPartition bands(16, 2);
  StudyOptions opts;
  opts.base.steps = 4000;
  opts.jobs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(convergence_study(m, bands, 7, {50, 100, 200, 400, 800}, opts));
  }
}
BENCHMARK(BM_ConvergenceStudy)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime()->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
