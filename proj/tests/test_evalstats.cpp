#include <gtest/gtest.h>

#include <cmath>

#include "a2p2/error.hpp"
#include "a2p2/evalstats.hpp"
#include "a2p2/random.hpp"

using namespace a2p2;
using namespace a2p2::evalstats;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::parse_error;
}

// Every sign pattern written out directly, summing with fresh arithmetic.
double brute_force_sign_flip(const std::vector<double>& d) {
  const std::size_t n = d.size();
  double scale = 0.0;
  for (double x : d) scale += std::fabs(x);
  const double tol = 1e-9 * std::max(scale, 1.0);
  double obs = 0.0;
  for (double x : d) obs += x;
  obs = std::fabs(obs);
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1U) ? -d[i] : d[i];
    if (std::fabs(s) >= obs - tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::uint64_t{1} << n);
}

PairedSample from_diffs(const std::vector<double>& d) {
  std::vector<double> c(d.size(), 50.0), i;
  for (double x : d) i.push_back(50.0 - x);
  return PairedSample(i, c);
}

}  // namespace

TEST(PercentReduction, TableValues) {
  EXPECT_EQ(round_to(percent_reduction(31.26, 22.089), 2), 29.34);
  EXPECT_EQ(round_to(percent_reduction(32.15, 21.55), 2), 32.97);
  // 100 * 8.01 / 30.54 = 26.2279...; rounds to 26.23, not the printed 26.22.
  EXPECT_NEAR(percent_reduction(30.54, 22.53), 26.2279, 1e-4);
  EXPECT_EQ(round_to(percent_reduction(30.54, 22.53), 2), 26.23);
}

TEST(PercentReduction, DomainError) {
  EXPECT_EQ(code_of([] { percent_reduction(0.0, 1.0); }), Errc::domain_error);
  EXPECT_EQ(code_of([] { percent_reduction(-3.0, 1.0); }), Errc::domain_error);
}

TEST(PercentReduction, Properties) {
  for (double x : {0.5, 1.0, 22.0, 1e6}) {
    EXPECT_EQ(percent_reduction(x, x), 0.0);
    EXPECT_GT(percent_reduction(x, x * 0.8), 0.0);
    EXPECT_LT(percent_reduction(x, x * 1.2), 0.0);
  }
}

TEST(RoundTo, HalfAwayFromZero) {
  EXPECT_EQ(round_to(2.675, 2), 2.68);
  EXPECT_EQ(round_to(-2.675, 2), -2.68);
  EXPECT_EQ(round_to(0.0005, 3), 0.001);
  EXPECT_EQ(round_to(1.23449, 2), 1.23);
}

TEST(PairedPermutation, IdenticalPairsGiveOne) {
  const PairedSample s({10, 20, 30, 40}, {10, 20, 30, 40});
  EXPECT_EQ(paired_permutation_test(s), 1.0);
  EXPECT_EQ(paired_permutation_test(s, MonteCarlo{1000, 3}), 1.0);
}

TEST(PairedPermutation, HandDatasetMatchesAll16Patterns) {
  const std::vector<double> d = {3.5, -1.0, 4.25, 2.0};
  const double p = paired_permutation_test(from_diffs(d));
  EXPECT_NEAR(p, brute_force_sign_flip(d), 1e-12);
  // |sum| = 8.75; patterns reaching it: all-positive and all-negative, plus the
  // two that flip only -1.0 (|sum| = 10.75) and their mirror images.
  EXPECT_NEAR(p, 4.0 / 16.0, 1e-12);
}

TEST(PairedPermutation, RandomFixturesMatchBruteForce) {
  Rng rng(20240101);
  for (int fixture = 0; fixture < 25; ++fixture) {
    const std::size_t n = 1 + uniform_below(rng, 10);
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(std::round((uniform_unit(rng) * 20.0 - 6.0) * 1000) / 1000);
    EXPECT_NEAR(paired_permutation_test(from_diffs(d)), brute_force_sign_flip(d), 1e-12) << fixture;
  }
}

TEST(PairedPermutation, EmptySample) {
  EXPECT_EQ(code_of([] { paired_permutation_test(PairedSample({}, {})); }), Errc::empty_sample);
}

TEST(PairedPermutation, MonteCarloIsDeterministicPerSeed) {
  const auto s = from_diffs({1.0, 2.0, -0.5, 3.0, 0.25, 1.5});
  EXPECT_EQ(paired_permutation_test(s, MonteCarlo{5000, 9}), paired_permutation_test(s, MonteCarlo{5000, 9}));
}

TEST(PermutationProperty, InvariantUnderPairOrder) {
  std::vector<double> d = {2.5, -1.25, 0.75, 3.0, -0.5, 1.0, 4.0};
  const double p = paired_permutation_test(from_diffs(d));
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    shuffle(std::span<double>(d), rng);
    EXPECT_NEAR(paired_permutation_test(from_diffs(d)), p, 1e-12);
  }
}

TEST(PermutationProperty, ZeroDifferencePairDoublesBothCounts) {
  // A zero pair doubles the pattern count and doubles the hit count, so p is
  // unchanged.
  const std::vector<double> d = {2.5, -1.25, 0.75, 3.0, -0.5};
  auto with_zero = d;
  with_zero.push_back(0.0);
  EXPECT_NEAR(paired_permutation_test(from_diffs(with_zero)), paired_permutation_test(from_diffs(d)), 1e-12);
  EXPECT_NEAR(brute_force_sign_flip(with_zero) * 64, brute_force_sign_flip(d) * 32 * 2, 1e-9);
}

TEST(PermutationProperty, MonteCarloConvergesToExact) {
  Rng rng(77);
  for (int fixture = 0; fixture < 5; ++fixture) {
    std::vector<double> d;
    for (int i = 0; i < 10; ++i) d.push_back(uniform_unit(rng) * 6.0 - 1.5);
    const auto s = from_diffs(d);
    const double exact = paired_permutation_test(s);
    const std::size_t m = 20000;
    const double mc = paired_permutation_test(s, MonteCarlo{m, static_cast<std::uint64_t>(fixture)});
    const double se = std::sqrt(std::max(exact * (1 - exact), 1.0 / m) / m);
    EXPECT_LE(std::fabs(mc - exact), 3 * se + 1.0 / m) << fixture;
  }
}

TEST(UnpairedPermutation, SmallHandCase) {
  // Splits of {1,2,3,4} into 2+2: sums 3,4,5,5,6,7; observed {1,2} vs {3,4}
  // has the extreme |diff| = 2, shared with {3,4}: p = 2/6.
  const std::vector<double> a = {1, 2}, b = {3, 4};
  EXPECT_NEAR(unpaired_permutation_test(a, b), 2.0 / 6.0, 1e-12);
  EXPECT_EQ(unpaired_permutation_test(a, a), 1.0);
  EXPECT_EQ(code_of([&] { unpaired_permutation_test(a, std::vector<double>{}); }), Errc::empty_sample);
}

TEST(UnpairedPermutation, MonteCarloNearExact) {
  const std::vector<double> a = {12.1, 15.3, 9.8, 14.4, 13.0}, b = {8.2, 7.9, 11.0, 9.1, 6.5, 10.2};
  const double exact = unpaired_permutation_test(a, b);
  const double mc = unpaired_permutation_test(a, b, MonteCarlo{20000, 1});
  EXPECT_NEAR(mc, exact, 3 * std::sqrt(exact * (1 - exact) / 20000) + 1e-3);
}

TEST(Fisher, TableTwoCounts) {
  const auto r = fisher_exact_2x3({{{12, 7, 1}, {2, 9, 9}}});
  EXPECT_LT(r.p, 0.001);
  // Frozen from exact rational enumeration: 40094 / 42077695.
  EXPECT_NEAR(r.p, 40094.0 / 42077695.0, 1e-12);
  EXPECT_NEAR(r.total_probability, 1.0, 1e-12);
}

TEST(Fisher, IdenticalRowsGiveOne) {
  const auto r = fisher_exact_2x3({{{5, 5, 5}, {5, 5, 5}}});
  EXPECT_NEAR(r.p, 1.0, 1e-12);
}

TEST(Fisher, SmallTableMatchesRationalOracle) {
  EXPECT_NEAR(fisher_exact_2x3({{{3, 1, 2}, {1, 3, 2}}}).p, 59.0 / 77.0, 1e-12);
}

TEST(Fisher, DegenerateTables) {
  EXPECT_EQ(code_of([] { fisher_exact_2x3({{{0, 0, 0}, {1, 2, 3}}}); }), Errc::degenerate_table);
  EXPECT_EQ(code_of([] { fisher_exact_2x3({{{1, 0, 2}, {1, 0, 3}}}); }), Errc::degenerate_table);
  EXPECT_EQ(code_of([] { fisher_exact_2x3({{{1, -1, 2}, {1, 3, 3}}}); }), Errc::degenerate_table);
}

TEST(FisherProperty, ProbabilitiesSumToOne) {
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    ContingencyTable2x3 t;
    for (auto& row : t) {
      for (auto& c : row) c = 1 + static_cast<std::int64_t>(uniform_below(rng, 12));
    }
    const auto r = fisher_exact_2x3(t);
    EXPECT_NEAR(r.total_probability, 1.0, 1e-12);
    EXPECT_GT(r.p, 0.0);
    EXPECT_LE(r.p, 1.0);
  }
}

TEST(FisherProperty, InvariantUnderColumnPermutation) {
  const ContingencyTable2x3 t = {{{12, 7, 1}, {2, 9, 9}}};
  const double p = fisher_exact_2x3(t).p;
  std::array<int, 3> perm = {0, 1, 2};
  do {
    ContingencyTable2x3 q;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 3; ++c) q[r][c] = t[r][perm[c]];
    }
    EXPECT_NEAR(fisher_exact_2x3(q).p, p, 1e-15);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(FisherProperty, StableAcrossRuns) {
  const ContingencyTable2x3 t = {{{12, 7, 1}, {2, 9, 9}}};
  const double first = fisher_exact_2x3(t).p;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(fisher_exact_2x3(t).p, first);
}

TEST(CohensD, IdenticalGroupsPooledIsZero) {
  const PairedSample s({10, 12, 14, 16}, {10, 12, 14, 16});
  EXPECT_EQ(cohens_d(s, DVariant::pooled).value, 0.0);
  EXPECT_EQ(code_of([&] { cohens_d(s, DVariant::dz); }), Errc::zero_variance);
}

TEST(CohensD, DzOfOneByConstruction) {
  // differences 0, 1, 2: mean 1, sd 1
  const PairedSample s({10, 10, 10}, {10, 11, 12});
  const auto d = cohens_d(s);
  EXPECT_EQ(d.variant, DVariant::dz);
  EXPECT_NEAR(d.value, 1.0, 1e-12);
}

TEST(CohensD, HandDatasetMatchesDirectFormula) {
  const std::vector<double> c = {31.2, 28.4, 35.9, 30.1, 26.7, 33.3};
  const std::vector<double> i = {22.0, 24.9, 25.1, 21.8, 23.3, 20.4};
  const PairedSample s(i, c);
  double md = 0, mc = 0, mi = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    md += (c[k] - i[k]) / 6;
    mc += c[k] / 6;
    mi += i[k] / 6;
  }
  double vd = 0, vc = 0, vi = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    vd += std::pow(c[k] - i[k] - md, 2) / 5;
    vc += std::pow(c[k] - mc, 2) / 5;
    vi += std::pow(i[k] - mi, 2) / 5;
  }
  EXPECT_NEAR(cohens_d(s, DVariant::dz).value, md / std::sqrt(vd), 1e-12);
  EXPECT_NEAR(cohens_d(s, DVariant::pooled).value, (mc - mi) / std::sqrt((vc + vi) / 2), 1e-12);
}

TEST(CohensD, NeedsTwoPairs) {
  EXPECT_THROW(cohens_d(PairedSample({1}, {2})), Error);
}

TEST(Sus, Anchors) {
  const std::vector<int> threes(10, 3);
  EXPECT_EQ(sus_score(threes), 50.0);
  EXPECT_EQ(sus_score(std::vector<int>{5, 1, 5, 1, 5, 1, 5, 1, 5, 1}), 100.0);
  EXPECT_EQ(sus_score(std::vector<int>{1, 5, 1, 5, 1, 5, 1, 5, 1, 5}), 0.0);
  EXPECT_EQ(sus_score(std::vector<int>{4, 2, 4, 2, 5, 1, 4, 2, 4, 3}), 77.5);
}

TEST(Sus, Errors) {
  EXPECT_EQ(code_of([] { sus_score(std::vector<int>(9, 3)); }), Errc::bad_item_count);
  EXPECT_EQ(code_of([] { sus_score(std::vector<int>{3, 3, 3, 3, 3, 3, 3, 3, 3, 6}); }), Errc::out_of_range);
  EXPECT_EQ(code_of([] { sus_score(std::vector<int>{0, 3, 3, 3, 3, 3, 3, 3, 3, 3}); }), Errc::out_of_range);
}

TEST(PairedSample, ValidatesShape) {
  EXPECT_THROW(PairedSample({1, 2}, {1}), Error);
  EXPECT_THROW(PairedSample({1, NAN}, {1, 2}), Error);
}
