#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "groupsel/composition.hpp"
#include "groupsel/error.hpp"
#include "groupsel/fission.hpp"
#include "groupsel/population.hpp"
#include "groupsel/rates.hpp"

using namespace groupsel;

namespace {

Composition random_composition(Rng& rng, int ell, int max) {
  Composition c(ell);
  do {
    for (int k = 0; k < ell; ++k) c.set(k, static_cast<std::int64_t>(uniform_index(rng, max + 1)));
  } while (c.is_zero());
  return c;
}

// Every composition in the box [0, i], zero included.
std::vector<Composition> box(const Composition& i) {
  std::vector<Composition> out;
  Composition c(i.ell());
  while (true) {
    out.push_back(c);
    int k = 0;
    while (k < i.ell() && c[k] == i[k]) c.set(k++, 0);
    if (k == i.ell()) break;
    c.set(k, c[k] + 1);
  }
  return out;
}

}  // namespace

TEST(Composition, BasicArithmetic) {
  Composition a{1, 2};
  EXPECT_EQ(a.size(), 3);
  EXPECT_EQ(a.plus_unit(0), (Composition{2, 2}));
  EXPECT_EQ(a.minus_unit(1), (Composition{1, 1}));
  EXPECT_TRUE(a.dominates(Composition{1, 0}));
  EXPECT_FALSE(a.dominates(Composition{2, 0}));
  EXPECT_EQ(Composition::parse(a.to_string()), a);
  EXPECT_THROW((void)Composition{0}.minus_unit(0), Error);
}

TEST(Composition, OverflowIsAnError) {
  Composition a{std::numeric_limits<std::int64_t>::max()};
  try {
    (void)a.plus_unit(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflow);
  }
}

TEST(Composition, FloorMapsLatticePointsBack) {
  for (int i = 0; i <= 1000; ++i) {
    const double u = static_cast<double>(i) / 100.0;
    EXPECT_EQ(floor_composition(std::span<const double>(&u, 1), 100.0)[0], i);
  }
}

TEST(Totals, Examples) {
  Population empty(1);
  EXPECT_EQ(totals(empty).group_count, 0);
  EXPECT_EQ(totals(empty).individuals, std::vector<std::int64_t>{0});

  Population p(1);
  p.add(Composition{3}, 2);
  EXPECT_EQ(totals(p).group_count, 2);
  EXPECT_EQ(totals(p).individuals, std::vector<std::int64_t>{6});

  Population q(2);
  q.add(Composition{1, 2}, 1);
  q.add(Composition{2, 0}, 3);
  EXPECT_EQ(totals(q).group_count, 4);
  EXPECT_EQ(totals(q).individuals, (std::vector<std::int64_t>{7, 2}));
}

TEST(Population, RejectsZeroComposition) {
  Population p(1);
  EXPECT_THROW(p.add(Composition{0}), Error);
  p.add(Composition{2}, 1);
  EXPECT_THROW(p.remove(Composition{2}, 2), Error);
}

TEST(Population, CacheCoherenceUnderRandomMutations) {
  Rng rng = make_rng(11, {});
  Population p(3);
  for (int step = 0; step < 20000; ++step) {
    const Composition c = random_composition(rng, 3, 4);
    const auto n = static_cast<std::int64_t>(1 + uniform_index(rng, 3));
    if (uniform01(rng) < 0.55) {
      p.add(c, n);
    } else if (p.count(c) >= n) {
      p.remove(c, n);
    }
    if (step % 97 == 0) {
      const Totals t = p.recompute_totals();
      ASSERT_EQ(t.group_count, p.group_count());
      ASSERT_EQ(t.individuals, p.individuals());
    }
  }
  for (const auto& [c, x] : p) {
    EXPECT_GT(x, 0);
    EXPECT_FALSE(c.is_zero());
  }
}

TEST(Eta, UniformBinaryClosedForm) {
  auto law = make_fission_law({"uniform_binary"});
  EXPECT_DOUBLE_EQ(eta(*law, Composition{3}, Composition{1}), 0.5);
  EXPECT_DOUBLE_EQ(law->eta(Composition{1, 1}, Composition{1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(law->eta(Composition{3}, Composition{4}), 0.0);
  EXPECT_DOUBLE_EQ(law->eta(Composition{3}, Composition{0}), 0.0);
}

TEST(Eta, NonproperLaw) {
  auto law = make_fission_law({"nonproper"});
  const Composition i{2, 5};
  EXPECT_DOUBLE_EQ(law->eta(i, i), 1.0);
  EXPECT_DOUBLE_EQ(law->eta(i, Composition{1, 5}), 0.0);
  Rng rng = make_rng(1, {});
  std::vector<Composition> pieces;
  for (int s = 0; s < 100; ++s) {
    sample_partition(*law, i, rng, pieces);
    ASSERT_EQ(pieces, std::vector<Composition>{i});
  }
}

TEST(Eta, UnknownLawIsConfigError) {
  try {
    make_fission_law({"no_such_law"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigSchema);
  }
}

TEST(Eta, MonteCarloOracleTwoTypes) {
  auto law = make_fission_law({"uniform_binary"});
  const Composition i{1, 1};
  const Composition ip{1, 0};
  Rng rng = make_rng(2024, {});
  std::vector<Composition> pieces;
  const int samples = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    law->sample(i, rng, pieces);
    int theta = 0;
    for (const auto& p : pieces) theta += p == ip ? 1 : 0;
    sum += theta;
    sum2 += theta * theta;
  }
  const double mean = sum / samples;
  const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
  EXPECT_NEAR(mean, law->eta(i, ip), 3.0 * se);
}

TEST(SamplePartition, UniformBinaryChiSquare) {
  // Box outcomes A in {0,1,2,3}; A in {0,3} collapse to {3}, A in {1,2} give {1,2}.
  auto law = make_fission_law({"uniform_binary"});
  Rng rng = make_rng(77, {});
  std::vector<Composition> pieces;
  const int draws = 100000;
  int whole = 0, split = 0;
  for (int s = 0; s < draws; ++s) {
    sample_partition(*law, Composition{3}, rng, pieces);
    if (pieces.size() == 1) {
      ASSERT_EQ(pieces[0], Composition{3});
      ++whole;
    } else {
      ASSERT_EQ(pieces.size(), 2u);
      std::vector<std::int64_t> sizes{pieces[0][0], pieces[1][0]};
      std::sort(sizes.begin(), sizes.end());
      ASSERT_EQ(sizes, (std::vector<std::int64_t>{1, 2}));
      ++split;
    }
  }
  const double expected = draws * 0.5;
  const double chi2 = (whole - expected) * (whole - expected) / expected +
                      (split - expected) * (split - expected) / expected;
  EXPECT_LT(chi2, 10.828);  // chi^2_1 at 1e-3
}

TEST(SamplePartition, ConservationAndPieceBoundEveryLaw) {
  Rng rng = make_rng(5, {});
  std::vector<Composition> pieces;
  for (const char* name : {"uniform_binary", "binomial", "nonproper", "uniform_ternary"}) {
    auto law = make_fission_law({name, 0.3});
    for (int s = 0; s < 10000; ++s) {
      const int ell = 1 + static_cast<int>(uniform_index(rng, 3));
      const Composition i = random_composition(rng, ell, 12);
      law->sample(i, rng, pieces);
      ASSERT_FALSE(pieces.empty());
      ASSERT_LE(static_cast<int>(pieces.size()), law->max_pieces());
      Composition sum(ell);
      for (const auto& p : pieces) {
        ASSERT_FALSE(p.is_zero());
        sum = sum + p;
      }
      ASSERT_EQ(sum, i) << name;
    }
  }
}

TEST(Eta, MonteCarloAgreesWithAnalyticOnRandomPairs) {
  Rng pick = make_rng(99, {});
  for (const char* name : {"uniform_binary", "binomial"}) {
    auto law = make_fission_law({name, 0.35});
    for (int pair = 0; pair < 50; ++pair) {
      const int ell = 1 + static_cast<int>(uniform_index(pick, 2));
      const Composition i = random_composition(pick, ell, 4);
      auto candidates = box(i);
      Composition ip;
      do {
        ip = candidates[uniform_index(pick, candidates.size())];
      } while (ip.is_zero());
      Rng rng = make_rng(1234, {static_cast<std::uint64_t>(pair)});
      std::vector<Composition> pieces;
      const int samples = 100000;
      double sum = 0.0, sum2 = 0.0;
      for (int s = 0; s < samples; ++s) {
        law->sample(i, rng, pieces);
        int theta = 0;
        for (const auto& p : pieces) theta += p == ip ? 1 : 0;
        sum += theta;
        sum2 += theta * theta;
      }
      const double mean = sum / samples;
      const double se = std::sqrt(std::max(sum2 / samples - mean * mean, 1e-12) / samples);
      EXPECT_NEAR(mean, law->eta(i, ip), 4.0 * se + 1e-12) << name << " " << i.to_string();
    }
  }
}

TEST(Eta, ConservationIdentityOnLattice) {
  for (const char* name : {"uniform_binary", "binomial", "nonproper"}) {
    auto law = make_fission_law({name, 0.4});
    for (const auto& i : box(Composition{4, 3})) {
      if (i.is_zero()) continue;
      std::vector<double> first(2, 0.0);
      double pieces = 0.0;
      for (const auto& ip : box(i)) {
        const double e = law->eta(i, ip);
        pieces += e;
        for (int k = 0; k < 2; ++k) first[static_cast<std::size_t>(k)] += static_cast<double>(ip[k]) * e;
      }
      EXPECT_NEAR(first[0], static_cast<double>(i[0]), 1e-12) << name;
      EXPECT_NEAR(first[1], static_cast<double>(i[1]), 1e-12) << name;
      EXPECT_LE(pieces, law->max_pieces() + 1e-12);
    }
  }
}

TEST(Eta, SampledLawUsesMonteCarloEstimate) {
  auto law = make_fission_law({"uniform_ternary", 0.5, 20000});
  EXPECT_FALSE(law->analytic());
  EXPECT_EQ(law->estimate_samples(), 20000u);
  const Composition i{3};
  double first = 0.0;
  for (int a = 1; a <= 3; ++a) first += a * law->eta(i, Composition{a});
  EXPECT_NEAR(first, 3.0, 1e-9);  // every sample conserves, so the estimate does too
}

TEST(SecondMoments, UniformBinaryAgainstEnumeration) {
  auto law = make_fission_law({"uniform_binary"});
  const Composition i{2, 2};
  const auto outcomes = box(i);
  const double p = 1.0 / static_cast<double>(outcomes.size());
  for (const auto& ip : outcomes) {
    if (ip.is_zero()) continue;
    for (const auto& jp : outcomes) {
      if (jp.is_zero()) continue;
      double expect = 0.0;
      for (const auto& a : outcomes) {
        const Composition rest = i - a;
        const double ti = (a == ip ? 1 : 0) + (rest == ip ? 1 : 0);
        const double tj = (a == jp ? 1 : 0) + (rest == jp ? 1 : 0);
        expect += p * ti * tj;
      }
      EXPECT_NEAR(law->cross_moment(i, ip, jp), expect, 1e-14);
    }
  }
}

TEST(RateBounds, ConstantRatesPass) {
  RateSpec rates(1, {RateFunction::constant(1.0)}, {RateFunction::constant(0.5)},
                 {RateFunction::constant(0.2)}, RateFunction::constant(0.3),
                 RateFunction::constant(0.1));
  auto law = make_fission_law({"uniform_binary"});
  const auto bound = rates.at({100, 1}, ExtinctionScaling::kMeasure);
  auto report = rate_bounds_check(bound, *law, {1.7, 0.3, 0.1, 2}, Composition{100});
  EXPECT_TRUE(report.pass()) << report.summary();
}

TEST(RateBounds, BoxExpFissionScan) {
  RateSpec rates(1, {RateFunction::constant(0.0)}, {RateFunction::constant(0.0)},
                 {RateFunction::constant(0.0)}, RateFunction::box_exp_fission(),
                 RateFunction::constant(0.0));
  const auto at10 = rates.at({10, 1}, ExtinctionScaling::kMeasure);
  double sup = 0.0;
  for (int i = 0; i <= 100; ++i) sup = std::max(sup, (i + 1) * std::exp(-i / 10.0) / 10.0);
  auto law = make_fission_law({"uniform_binary"});
  auto report = rate_bounds_check(at10, *law, {1.0, 1.0, 1.0, 2}, Composition{100});
  EXPECT_TRUE(report.pass());
  const BoundCheckEntry* fission = nullptr;
  for (const auto& e : report.entries) {
    if (e.function.rfind("fission:", 0) == 0) fission = &e;
  }
  ASSERT_NE(fission, nullptr);
  EXPECT_DOUBLE_EQ(fission->sup, sup);
}

TEST(RateBounds, UnboundedBirthFailsAtBoxCorner) {
  // beta(i) = i_1 at n = 1; i_1 beta = i_1^2 has no uniform bound.
  RateSpec rates(1, {RateFunction::affine(0.0, 0.0, {1.0})}, {RateFunction::constant(0.0)},
                 {RateFunction::constant(0.0)}, RateFunction::constant(0.0),
                 RateFunction::constant(0.0));
  auto law = make_fission_law({"uniform_binary"});
  auto report = rate_bounds_check(rates.at({1, 1}, ExtinctionScaling::kMeasure), *law,
                                  {50.0, 1.0, 1.0, std::nullopt}, Composition{100});
  ASSERT_FALSE(report.pass());
  EXPECT_EQ(report.violation()->argsup, Composition{100});
}

TEST(RateSpec, IndividualRatesVanishWithoutType) {
  RateSpec rates(2, {RateFunction::constant(1.0), RateFunction::constant(1.0)},
                 {RateFunction::constant(1.0), RateFunction::constant(1.0)},
                 {RateFunction::constant(1.0), RateFunction::constant(1.0)},
                 RateFunction::constant(0.0), RateFunction::constant(0.0));
  const Composition i{3, 0};
  EXPECT_EQ(rates.birth(i, 1), 0.0);
  EXPECT_EQ(rates.death(i, 1), 0.0);
  EXPECT_EQ(rates.migration(i, 1), 0.0);
  EXPECT_EQ(rates.birth(i, 0), 1.0);
}

TEST(RateSpec, ExtinctionScalingsDifferByNPowerEll) {
  RateSpec rates(2, {RateFunction::constant(0), RateFunction::constant(0)},
                 {RateFunction::constant(0), RateFunction::constant(0)},
                 {RateFunction::constant(0), RateFunction::constant(0)},
                 RateFunction::constant(0), RateFunction::affine(0.5, 0.1));
  const ScalingParams s{7, 3};
  const auto measure = rates.at(s, ExtinctionScaling::kMeasure);
  const auto density = rates.at(s, ExtinctionScaling::kDensity);
  for (const auto& i : box(Composition{5, 5})) {
    if (i.is_zero()) continue;
    EXPECT_NEAR(measure.extinction(i), 49.0 * density.extinction(i), 1e-14);
  }
}
