#include <gtest/gtest.h>

#include <cmath>

#include "groupsel/metrics.hpp"
#include "groupsel/random.hpp"

using namespace groupsel;

namespace {

EmpiricalMeasure atoms(std::initializer_list<std::pair<double, double>> list) {
  EmpiricalMeasure mu(1);
  for (const auto& [u, w] : list) {
    const double p[] = {u};
    mu.add(p, w);
  }
  return mu;
}

EmpiricalMeasure random_measure(Rng& rng, int ell, double upper) {
  EmpiricalMeasure mu(ell);
  const int count = 1 + static_cast<int>(uniform_index(rng, 6));
  std::vector<double> u(static_cast<std::size_t>(ell));
  for (int j = 0; j < count; ++j) {
    for (double& v : u) v = upper * uniform01(rng);
    mu.add(u, 0.2 + uniform01(rng));
  }
  return mu;
}

}  // namespace

TEST(Pair, Examples) {
  const auto mu = atoms({{2.0, 0.5}});
  EXPECT_DOUBLE_EQ(pair(mu, [](Point u) { return std::abs(u[0]); }), 1.0);
  const auto nu = atoms({{0.3, 0.5}, {1.2, 1.25}});
  EXPECT_DOUBLE_EQ(pair(nu, [](Point) { return 1.0; }), nu.mass());
}

TEST(Pair, DensityMatchesAtomsUnderRefinement) {
  // Step density of a population against its empirical measure: the gap is
  // the within-cell variation of g and shrinks like 1/n.
  auto g = [](Point u) { return std::sin(u[0]) + 0.5; };
  double previous = 1e9;
  for (std::int64_t n : {4, 16, 64}) {
    Population pop(1);
    pop.add(Composition{n}, 3);
    pop.add(Composition{2 * n}, 1);
    const ScalingParams s(n, 2);
    const double atom = pair(empirical_measure(pop, s), g);
    // Rescale the step density to the same total mass.
    const double step = pair(density_step_function(pop, s), g) * static_cast<double>(n);
    const double gap = std::abs(atom - step);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 0.02);
}

TEST(Pair, LinearInMeasureAndFunction) {
  auto rng = make_rng(21, {1});
  auto f = [](Point u) { return std::cos(u[0]); };
  auto g = [](Point u) { return u[0] * u[0]; };
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_measure(rng, 1, 3.0);
    const auto b = random_measure(rng, 1, 3.0);
    EXPECT_NEAR(pair(a.combined(b, 2.5), f), pair(a, f) + 2.5 * pair(b, f), 1e-12);
    EXPECT_NEAR(pair(a, [&](Point u) { return f(u) - 3.0 * g(u); }), pair(a, f) - 3.0 * pair(a, g), 1e-12);
  }
}

TEST(Moments, Examples) {
  const auto zero = moments(EmpiricalMeasure(2));
  EXPECT_EQ(zero.mass, 0.0);
  EXPECT_EQ(zero.first, (std::vector<double>{0.0, 0.0}));
  EmpiricalMeasure mu(2);
  const double u[] = {1.0, 2.0};
  mu.add(u, 2.0);
  const auto m = moments(mu);
  EXPECT_DOUBLE_EQ(m.mass, 2.0);
  EXPECT_EQ(m.first, (std::vector<double>{2.0, 4.0}));
}

TEST(Bank, MembersAreBoundedAndLipschitz) {
  for (int ell : {1, 2, 3}) {
    const TestFunctionBank bank(ell, 4.0, 512, 7);
    ASSERT_EQ(bank.size(), 512u);
    auto rng = make_rng(22, {static_cast<std::uint64_t>(ell)});
    std::vector<double> a(static_cast<std::size_t>(ell)), b(a.size());
    for (std::size_t j = 0; j < bank.size(); ++j) {
      for (int trial = 0; trial < 20; ++trial) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
          a[k] = 4.0 * uniform01(rng);
          b[k] = a[k] + 0.1 * (uniform01(rng) - 0.5);
          d2 += (a[k] - b[k]) * (a[k] - b[k]);
        }
        const double fa = bank[j].f(a), fb = bank[j].f(b);
        ASSERT_LE(std::abs(fa), 1.0 + 1e-15) << bank[j].name;
        ASSERT_LE(std::abs(fa - fb), std::sqrt(d2) + 1e-12) << bank[j].name;
      }
    }
  }
}

TEST(Bank, SmallerBankIsPrefix) {
  const TestFunctionBank small(2, 3.0, 100, 5), large(2, 3.0, 300, 5);
  const double u[] = {0.7, 1.9};
  for (std::size_t j = 0; j < small.size(); ++j) {
    EXPECT_EQ(small[j].name, large[j].name);
    EXPECT_EQ(small[j].f(u), large[j].f(u));
  }
}

TEST(RhoW, Examples) {
  const TestFunctionBank bank(1, 3.0);
  auto rng = make_rng(23, {1});
  const auto mu = random_measure(rng, 1, 3.0);
  EXPECT_EQ(rho_w(pairing_of(mu), pairing_of(mu), bank).value, 0.0);
  for (double d : {0.05, 0.4, 1.0}) {
    const auto a = atoms({{0.0, 1.0}});
    const auto b = atoms({{d, 1.0}});
    const auto r = rho_w(pairing_of(a), pairing_of(b), bank);
    EXPECT_NEAR(r.value, d, 1e-12);
    EXPECT_EQ(r.bank_size, 512u);
    EXPECT_EQ(r.seed, bank.seed());
  }
}

TEST(RhoW, MetricPropertiesOnSampledTriples) {
  const TestFunctionBank bank(2, 3.0, 256, 9);
  auto rng = make_rng(24, {1});
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = bank.pairings(pairing_of(random_measure(rng, 2, 3.0)));
    const auto b = bank.pairings(pairing_of(random_measure(rng, 2, 3.0)));
    const auto c = bank.pairings(pairing_of(random_measure(rng, 2, 3.0)));
    const double ab = rho_w(a, b, bank).value;
    EXPECT_EQ(ab, rho_w(b, a, bank).value);
    EXPECT_LE(rho_w(a, c, bank).value, ab + rho_w(b, c, bank).value + 1e-12);
  }
}

TEST(RhoW, MonotoneInBankSize) {
  auto rng = make_rng(25, {1});
  const auto a = random_measure(rng, 2, 3.0);
  const auto b = random_measure(rng, 2, 3.0);
  double previous = 0.0;
  for (std::size_t size : {16, 64, 256, 1024}) {
    const TestFunctionBank bank(2, 3.0, size, 3);
    const double r = rho_w(pairing_of(a), pairing_of(b), bank).value;
    EXPECT_GE(r, previous);
    previous = r;
  }
}

TEST(PairingConvergence, Examples) {
  const auto x = DensityGrid::from_function(1, 3.0, 90, [](Point u) { return std::exp(-u[0]); });
  const auto bank = pairing_bank(1, 3.0);
  ASSERT_EQ(bank.size(), 16u);
  for (const auto& row : lp_pairing_convergence({0.0, 1.0}, {pairing_of(x), pairing_of(x)},
                                                {pairing_of(x), pairing_of(x)}, bank)) {
    EXPECT_EQ(row.gap, 0.0);
  }
  // g supported beyond the box sees nothing of either density.
  auto y = x;
  for (double& v : y.values()) v *= 2.0;
  const std::vector<TestFunctionBank::Member> outside{{"far", [](Point u) { return u[0] > 5.0 ? 1.0 : 0.0; }}};
  const auto rows = lp_pairing_convergence({0.0}, {pairing_of(x)}, {pairing_of(y)}, outside);
  EXPECT_EQ(rows[0].gap, 0.0);
}
