#include <benchmark/benchmark.h>

#include "groupsel/ssa.hpp"

using namespace groupsel;

namespace {

Model reference_model(std::int64_t n, std::int64_t m) {
  RateSpec rates(1, {RateFunction::constant(1.0)}, {RateFunction::affine(0.0, 0.5)},
                 {RateFunction::constant(0.3)}, RateFunction::box_exp_fission(), RateFunction::constant(0.2));
  return Model{rates.at({n, m}, ExtinctionScaling::kMeasure), make_fission_law({"uniform_binary"})};
}

}  // namespace

// Events per second on the reference scenario at growing (n, m).
static void BM_Simulate(benchmark::State& state) {
  const auto n = state.range(0), m = state.range(1);
  const Model model = reference_model(n, m);
  Population pop(1);
  pop.add(Composition{n}, m);
  SimulationOptions opt;
  opt.horizon = 0.5;
  std::uint64_t events = 0, seed = 0;
  for (auto _ : state) {
    const auto traj = simulate(model, pop, ++seed, opt);
    events += traj.tally.total();
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Args({10, 50})->Args({20, 200})->Args({40, 800})->Unit(benchmark::kMillisecond);

static void BM_EventLog(benchmark::State& state) {
  const Model model = reference_model(20, 200);
  Population pop(1);
  pop.add(Composition{20}, 200);
  SimulationOptions opt;
  opt.horizon = 0.5;
  opt.event_log = true;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(model, pop, ++seed, opt));
}
BENCHMARK(BM_EventLog)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
