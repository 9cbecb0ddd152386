#include <benchmark/benchmark.h>

#include <cmath>

#include "groupsel/pde.hpp"

using namespace groupsel;

namespace {

LimitCoefficients reference() {
  RateSpec rates(1, {RateFunction::constant(1.0)}, {RateFunction::affine(0.0, 0.5)},
                 {RateFunction::constant(0.3)}, RateFunction::box_exp_fission(), RateFunction::constant(0.2));
  return LimitCoefficients::from_rates(rates, make_kernel({"uniform_binary"}));
}

DensityGrid bump(int ell, int cells) {
  return DensityGrid::from_function(ell, 3.0, cells, [](Point u) {
    double v = 1.0;
    for (double a : u) v *= std::abs(a - 1.0) < 0.5 ? 1.0 + std::cos(2.0 * M_PI * (a - 1.0)) : 0.0;
    return v;
  });
}

}  // namespace

static void BM_Step1D(benchmark::State& state) {
  const auto coeffs = reference();
  auto x = bump(1, static_cast<int>(state.range(0)));
  const double dt = 0.5 * admissible_dt(coeffs, x);
  for (auto _ : state) {
    step_density(coeffs, x, dt);
    benchmark::DoNotOptimize(x.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Step1D)->Arg(128)->Arg(256)->Arg(512)->Arg(1024);

static void BM_Solve(benchmark::State& state) {
  const auto coeffs = reference();
  const auto x0 = bump(1, 384);
  SolveOptions opt;
  opt.horizon = 1.0;
  opt.dt = 0.004;
  for (auto _ : state) benchmark::DoNotOptimize(solve(coeffs, x0, opt));
}
BENCHMARK(BM_Solve)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
