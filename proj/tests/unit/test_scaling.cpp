#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "groupsel/kernel.hpp"
#include "groupsel/random.hpp"
#include "groupsel/scaling.hpp"

using namespace groupsel;

namespace {

RateSpec constant_rates(int ell, double beta, double delta, double mu, RateFunction phi, double eps) {
  std::vector<RateFunction> b(static_cast<std::size_t>(ell), RateFunction::constant(beta));
  std::vector<RateFunction> d(static_cast<std::size_t>(ell), RateFunction::constant(delta));
  std::vector<RateFunction> m(static_cast<std::size_t>(ell), RateFunction::constant(mu));
  return RateSpec(ell, b, d, m, std::move(phi), RateFunction::constant(eps));
}

Population random_population(Rng& rng, int ell, int distinct) {
  Population pop(ell);
  for (int j = 0; j < distinct; ++j) {
    Composition i(ell);
    for (int k = 0; k < ell; ++k) i.set(k, static_cast<std::int64_t>(uniform_index(rng, 6)));
    if (i.is_zero()) i.set(0, 1);
    pop.add(i, 1 + static_cast<std::int64_t>(uniform_index(rng, 4)));
  }
  return pop;
}

}  // namespace

TEST(EmpiricalMeasure, Examples) {
  EXPECT_EQ(empirical_measure(Population(1), {3, 2}).mass(), 0.0);
  EXPECT_EQ(empirical_measure(Population(1), {3, 2}).atoms(), 0u);

  Population p(1);
  p.add(Composition{3}, 2);
  const auto lam = empirical_measure(p, {3, 2});
  ASSERT_EQ(lam.atoms(), 1u);
  EXPECT_DOUBLE_EQ(lam.location(0)[0], 1.0);
  EXPECT_DOUBLE_EQ(lam.weight(0), 1.0);
  EXPECT_DOUBLE_EQ(lam.mass(), 1.0);
}

TEST(EmpiricalMeasure, MassMatchesTotals) {
  auto rng = make_rng(11, {1});
  for (int trial = 0; trial < 50; ++trial) {
    const int ell = 1 + trial % 3;
    const auto pop = random_population(rng, ell, 1 + trial % 7);
    const ScalingParams s(1 + trial % 5, 1 + trial % 4);
    EXPECT_NEAR(empirical_measure(pop, s).mass(),
                static_cast<double>(totals(pop).group_count) / static_cast<double>(s.m), 1e-12);
  }
}

TEST(EmpiricalMeasure, LinearInPopulation) {
  auto rng = make_rng(12, {1});
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_population(rng, 2, 5);
    const auto b = random_population(rng, 2, 5);
    Population both = a;
    for (const auto& [i, x] : b) both.add(i, x);
    const ScalingParams s(4, 3);
    const auto lhs = empirical_measure(both, s);
    const auto rhs = empirical_measure(a, s).combined(empirical_measure(b, s));
    for (auto f : {+[](Point u) { return u[0] + 2.0 * u[1]; },
                   +[](Point u) { return std::cos(u[0] * u[1]); }}) {
      EXPECT_NEAR(lhs.pair(f), rhs.pair(f), 1e-12);
    }
  }
}

TEST(EmpiricalMeasure, CsvLayout) {
  Population p(2);
  p.add(Composition{1, 2}, 3);
  std::ostringstream os;
  write_csv(os, empirical_measure(p, {2, 3}));
  EXPECT_EQ(os.str(), "u_1,u_2,weight\n0.5,1,1\n");
}

TEST(HatRates, ConstantIndependentOfN) {
  const auto rates = constant_rates(1, 0.7, 0.2, 0.1, RateFunction::constant(0.3), 0.4);
  const double u[] = {1.37};
  for (std::int64_t n : {1, 10, 100}) {
    const auto hat = hat_rates(rates, {n, 5});
    EXPECT_DOUBLE_EQ(hat.birth(u, 0), 0.7);
    EXPECT_DOUBLE_EQ(hat.fission(u), 0.3);
  }
}

TEST(HatRates, BoxExpExample) {
  const auto rates = constant_rates(1, 1, 0, 0, RateFunction::box_exp_fission(), 0);
  const double u[] = {0.25};
  EXPECT_NEAR(hat_rates(rates, {10, 1}).fission(u), 0.3 * std::exp(-0.2), 1e-15);
}

TEST(HatRates, BoxExpLimitConverges) {
  const auto rates = constant_rates(1, 1, 0, 0, RateFunction::box_exp_fission(), 0);
  double previous = 1e9;
  for (std::int64_t n : {10, 40, 160}) {
    const auto hat = hat_rates(rates, {n, 1});
    double sup = 0.0;
    for (int j = 0; j <= 400; ++j) {
      const double u[] = {j * 0.01};
      sup = std::max(sup, std::abs(hat.fission(u) - u[0] * std::exp(-u[0])));
    }
    EXPECT_LT(sup, previous);
    previous = sup;
  }
  EXPECT_LT(previous, 0.02);
}

TEST(HatRates, ExtinctionScalingsDifferByNPowerEll) {
  for (int ell : {1, 2, 3}) {
    const auto rates = constant_rates(ell, 1, 0, 0, RateFunction{}, 0.0).at({7, 3}, ExtinctionScaling::kMeasure);
    RateSpec with_eps(ell, rates.birth_functions(), rates.death_functions(),
                      rates.migration_functions(), RateFunction{}, RateFunction::affine(0.2, 0.1));
    const auto hat = hat_rates(with_eps, {7, 3});
    std::vector<double> u(static_cast<std::size_t>(ell), 0.9);
    EXPECT_NEAR(hat.extinction_density(u), std::pow(7.0, ell) * hat.extinction_measure(u),
                1e-12 * hat.extinction_density(u));
  }
}

TEST(HatEta, MassBoundAndConservation) {
  for (const char* name : {"uniform_binary", "binomial", "nonproper", "uniform_ternary"}) {
    const auto law = make_fission_law({name});
    for (std::int64_t n : {3, 8}) {
      for (double x : {0.4, 1.0, 1.7}) {
        const double u[] = {x, 0.5 * x};
        const ScalingParams s(n, 1);
        const double mass = hat_eta_pairing(*law, s, u, [](Point) { return 1.0; });
        EXPECT_LE(mass, law->max_pieces() + 1e-12) << name;
        for (int k = 0; k < 2; ++k) {
          const double first = hat_eta_pairing(*law, s, u, [k](Point v) { return v[k]; });
          const double floor_nu = std::floor(static_cast<double>(n) * u[k]);
          // Sampled laws carry Monte-Carlo noise in eta.
          const double tol = law->analytic() ? 1e-12 : 2e-2 * std::max(1.0, floor_nu / n);
          EXPECT_NEAR(first, floor_nu / static_cast<double>(n), tol) << name;
        }
      }
    }
  }
}

TEST(HatEta, UniformBinaryPairingConverges) {
  const auto law = make_fission_law({"uniform_binary"});
  const double u[] = {1.0};
  auto f = [](Point v) { return v[0] * v[0]; };
  const double limit = 2.0 / 3.0;  // int_0^1 v^2 (2/1) dv
  double previous = 1e9;
  for (std::int64_t n : {5, 20, 80, 320}) {
    const double gap = std::abs(hat_eta_pairing(*law, {n, 1}, u, f) - limit);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 2e-3);
}

TEST(StepDensity, SingleGroup) {
  Population p(1);
  p.add(Composition{1});
  const auto x = density_step_function(p, {1, 1});
  const double in[] = {1.5}, below[] = {0.5}, edge[] = {2.0};
  EXPECT_DOUBLE_EQ(x.value(in), 1.0);
  EXPECT_DOUBLE_EQ(x.value(below), 0.0);
  EXPECT_DOUBLE_EQ(x.value(edge), 0.0);
  EXPECT_DOUBLE_EQ(x.mass(), 1.0);
}

TEST(StepDensity, MassAndPairing) {
  auto rng = make_rng(13, {1});
  for (int trial = 0; trial < 30; ++trial) {
    const int ell = 1 + trial % 2;
    const auto pop = random_population(rng, ell, 4);
    const ScalingParams s(2 + trial % 3, 1 + trial % 5);
    const auto x = density_step_function(pop, s);
    const double expected = static_cast<double>(totals(pop).group_count) /
                            (static_cast<double>(s.m) * std::pow(static_cast<double>(s.n), ell));
    EXPECT_NEAR(x.mass(), expected, 1e-12);

    // Oracle: sum over occupied cells of height * cell-average of g, with
    // the average from a much finer midpoint rule.
    auto g = [](Point u) {
      double a = 1.0;
      for (double v : u) a *= std::cos(0.7 * v) + 0.3 * v;
      return a;
    };
    const double cell = 1.0 / static_cast<double>(s.n);
    const int fine = 64;
    double oracle = 0.0;
    for (const auto& [i, height] : x.heights()) {
      double sum = 0.0;
      std::vector<double> v(static_cast<std::size_t>(ell));
      const int total = ell == 1 ? fine : fine * fine;
      for (int q = 0; q < total; ++q) {
        int r = q;
        for (int k = 0; k < ell; ++k) {
          v[static_cast<std::size_t>(k)] = (static_cast<double>(i[k]) + (r % fine + 0.5) / fine) * cell;
          r /= fine;
        }
        sum += g(v);
      }
      oracle += height * sum / total * std::pow(cell, ell);
    }
    EXPECT_NEAR(x.pair(g), oracle, 1e-4 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(StepDensity, ToGridKeepsMass) {
  Population p(1);
  p.add(Composition{3}, 2);
  p.add(Composition{7}, 1);
  const auto x = density_step_function(p, {4, 2});
  const auto grid = x.to_grid(3.0, 37);
  EXPECT_NEAR(grid.mass(), x.mass(), 1e-12);
}

// --- kernels -----------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> line_points(int ell, int count) {
  std::vector<std::vector<double>> pts;
  for (int j = 1; j <= count; ++j) {
    std::vector<double> u(static_cast<std::size_t>(ell));
    for (int k = 0; k < ell; ++k) u[static_cast<std::size_t>(k)] = 3.0 * j / count * (1.0 + 0.3 * k);
    pts.push_back(u);
  }
  return pts;
}

}  // namespace

TEST(Kernel, AnalyticConservation) {
  const auto phi = RateFunction::box_exp_fission();
  for (const char* name : {"uniform_binary", "binomial", "nonproper", "uniform_ternary"}) {
    const auto kernel = make_kernel({name, 0.3});
    for (int ell : {1, 2}) {
      const auto check = kernel_conservation(*kernel, phi, line_points(ell, 1000));
      EXPECT_EQ(check.points, 1000u);
      EXPECT_LE(check.first_moment_error, 1e-8) << name;
      EXPECT_LE(check.mass_excess, 1e-8) << name;
    }
  }
}

TEST(Kernel, TabulatedConservation) {
  const auto phi = RateFunction::constant(0.5);
  for (const char* name : {"uniform_binary", "binomial"}) {
    const auto kernel = make_kernel({name, 0.3}, 20);
    const auto check = kernel_conservation(*kernel, phi, line_points(1, 200));
    EXPECT_LE(check.first_moment_error, 1e-3) << name;
    EXPECT_LE(check.mass_excess, 1e-3) << name;
  }
}

TEST(Kernel, UniformBoxIntegrate) {
  const UniformBoxKernel k;
  const double u[] = {1.5, 0.5};
  // int over [0,1.5]x[0,0.5] of v1^2 v2 * 2/(0.75)
  const double exact = 2.0 / 0.75 * (1.5 * 1.5 * 1.5 / 3.0) * (0.5 * 0.5 / 2.0);
  EXPECT_NEAR(k.integrate(u, [](Point v) { return v[0] * v[0] * v[1]; }), exact, 1e-12);
}

TEST(Kernel, SourceAndGatherAreAdjoint) {
  for (const char* name : {"uniform_binary", "binomial", "nonproper"}) {
    const auto kernel = make_kernel({name, 0.3});
    for (int ell : {1, 2}) {
      DensityGrid grid(ell, 2.0, ell == 1 ? 64 : 16);
      std::vector<double> parent(grid.size()), f(grid.size()), src(grid.size()), gath(grid.size());
      for (std::size_t c = 0; c < grid.size(); ++c) {
        parent[c] = 1.0 + std::sin(0.37 * static_cast<double>(c));
        f[c] = std::cos(0.11 * static_cast<double>(c));
      }
      kernel->source(grid, parent, src);
      kernel->gather(grid, f, gath);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t c = 0; c < grid.size(); ++c) {
        lhs += src[c] * f[c] * grid.cell_volume();
        rhs += parent[c] * gath[c];
      }
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs))) << name << " ell=" << ell;
    }
  }
}

TEST(Kernel, UniformBoxFastPathMatchesDeposit) {
  // The sweep implementation against the generic deposit-based default.
  class Plain final : public OffspringKernel {
   public:
    std::string name() const override { return "plain"; }
    int pieces_bound() const override { return 2; }
    bool analytic() const override { return true; }
    bool conservative() const override { return true; }
    double integrate(Point u, const ScalarField& f) const override { return box_.integrate(u, f); }
    void deposit(const DensityGrid& g, Point u, double w,
                 std::vector<std::pair<std::size_t, double>>& cells) const override {
      box_.deposit(g, u, w, cells);
    }
    UniformBoxKernel box_;
  };
  const UniformBoxKernel fast;
  const Plain slow;
  for (int ell : {1, 2}) {
    DensityGrid grid(ell, 2.5, ell == 1 ? 50 : 12);
    std::vector<double> parent(grid.size()), a(grid.size()), b(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) parent[c] = 0.5 + std::cos(0.21 * static_cast<double>(c));
    fast.source(grid, parent, a);
    slow.source(grid, parent, b);
    for (std::size_t c = 0; c < grid.size(); ++c) EXPECT_NEAR(a[c], b[c], 1e-10);
    fast.gather(grid, parent, a);
    slow.gather(grid, parent, b);
    for (std::size_t c = 0; c < grid.size(); ++c) EXPECT_NEAR(a[c], b[c], 1e-10);
  }
}

TEST(Kernel, CicKeepsMassAndMoment) {
  DensityGrid grid(1, 4.0, 40);
  std::vector<std::pair<std::size_t, double>> cells;
  const double u[] = {1.234};
  cic_deposit(grid, u, 2.0, cells);
  double mass = 0.0, moment = 0.0;
  for (const auto& [c, w] : cells) {
    mass += w;
    moment += w * grid.center(c)[0];
  }
  EXPECT_NEAR(mass, 2.0, 1e-14);
  EXPECT_NEAR(moment, 2.0 * 1.234, 1e-12);
}
