#include <benchmark/benchmark.h>

#include "tsfb/plant.hpp"
#include "tsfb/stabilizer.hpp"

namespace {

using namespace tsfb;

TimeScale motor_scale() { return make_scale(RandomGrid{0.08, 0.15, 60, 1}); }

TimeScale mixed_scale() {
  return TimeScale({Interval{0.0, 0.5}, Point{0.62}, Point{0.7}, Interval{0.85, 1.2},
                    Point{1.3}, Point{1.41}, Point{1.5}, Point{1.62}});
}

void BM_WeightedGramianDiscrete(benchmark::State& state) {
  const TimeScale ts = motor_scale();
  const ControlSystem sys = discretize_on_scale(motor_model(), ts);
  const Seconds t = ts.min();
  const Seconds c = window_C(ts, t, WindowSpec{static_cast<int>(state.range(0))});
  for (auto _ : state) {
    benchmark::DoNotOptimize(weighted_gramian(sys, ts, t, c, 0.1, GramianOptions{}));
  }
}
BENCHMARK(BM_WeightedGramianDiscrete)->Arg(2)->Arg(5)->Arg(25);

void BM_WeightedGramianDense(benchmark::State& state) {
  const TimeScale ts = mixed_scale();
  const ControlSystem sys = discretize_on_scale(motor_model(), ts);
  const GramianOptions opts{1.0 / static_cast<double>(state.range(0)), 1e-10};
  for (auto _ : state) {
    benchmark::DoNotOptimize(weighted_gramian(sys, ts, 0.0, 0.5, 0.1, opts));
  }
}
BENCHMARK(BM_WeightedGramianDense)->Arg(1000)->Arg(4000);

void BM_PhiDenseRk4(benchmark::State& state) {
  MatrixSignal a;
  a.rows = a.cols = 2;
  a.eval = [](Seconds t, Seconds) {
    Matrix m(2, 2);
    m << -1.0, t, 0.5, -2.0;
    return m;
  };
  const TimeScale line({Interval{0.0, 1.0}});
  for (auto _ : state) benchmark::DoNotOptimize(phi(a, line, 1.0, 0.0, 1e-3));
}
BENCHMARK(BM_PhiDenseRk4);

void BM_GainSchedule(benchmark::State& state) {
  const TimeScale ts = motor_scale();
  const ControlSystem sys = discretize_on_scale(motor_model(), ts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gain_schedule(sys, ts, ts.min(), ts.max(), 0.1,
                                           WindowSpec{5}, GramianOptions{}));
  }
}
BENCHMARK(BM_GainSchedule)->Unit(benchmark::kMillisecond);

void BM_SweepRow(benchmark::State& state) {
  const TimeScale ts = deadline_scale(DeadlineScaleSpec{});
  SweepOptions o;
  o.ks = {static_cast<int>(state.range(0))};
  for (int i = 0; i < 40; ++i) o.alphas.push_back(0.01 + 0.02 * i);
  for (auto _ : state) benchmark::DoNotOptimize(sweep(motor_model(), ts, o));
}
BENCHMARK(BM_SweepRow)->Arg(2)->Arg(14)->Arg(25)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
