#include <gtest/gtest.h>

#include "fshe/rng.hpp"
#include "fshe/stats.hpp"

using namespace fshe;

// Reference blocks from numpy.random.Philox (which advances the counter once before its first block).
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x64({1, 0, 0, 0}, {0, 0}),
            (std::array<std::uint64_t, 4>{0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL, 0x907d7a052fd5b4dcULL}));
}

TEST(Philox, MoreKnownAnswers) {
  EXPECT_EQ(philox4x64({7, 3, 5, 11}, {123456789, 0x5EEDC0DEULL}),
            (std::array<std::uint64_t, 4>{0x1059fe314b4051cbULL, 0x2f9b47b020d3d104ULL, 0x12e86f7e91ee15a5ULL, 0x11348587392b2d35ULL}));
}

TEST(NormalStream, ReproducibleAndIndependentOfOtherStreams) {
  NormalStream a({42, 3, 1, purpose::coefficient_noise});
  NormalStream b({42, 3, 1, purpose::coefficient_noise});
  NormalStream c({42, 4, 1, purpose::coefficient_noise});
  int equal_other = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a();
    EXPECT_EQ(x, b());
    equal_other += x == c() ? 1 : 0;
  }
  EXPECT_EQ(equal_other, 0);
}

TEST(NormalStream, StandardNormalMoments) {
  NormalStream g({2024, 0, 0, purpose::user});
  std::vector<double> x(200000);
  for (auto& v : x) v = g();
  const auto m = moments(x);
  EXPECT_NEAR(m.mean, 0.0, 4.0 / std::sqrt(200000.0));
  EXPECT_NEAR(m.variance, 1.0, 4.0 * std::sqrt(2.0 / 200000.0));
  EXPECT_GT(ks_test(x, [](double t) { return normal_cdf(t); }).p_value, 0.001);
  NormalStream u({2024, 0, 0, purpose::user});
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

// Reference values from scipy.special.kolmogorov and scipy.stats.
TEST(Stats, KolmogorovSurvival) {
  EXPECT_NEAR(kolmogorov_survival(0.3), 0.9999906941986655, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.049485876755377876, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(2.0), 0.0006709252557796953, 1e-12);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Stats, KsStatistic) {
  const std::vector<double> x{0.1, -0.4, 1.3, 0.7, -2.2, 0.05, 0.9, -0.6, 1.8, -1.1};
  const auto r = ks_test(x, [](double t) { return normal_cdf(t); });
  EXPECT_NEAR(r.statistic, 0.158036347776927, 1e-12);
  EXPECT_NEAR(r.p_value, 0.93, 0.03);
}

TEST(Stats, SpearmanWithTies) {
  EXPECT_NEAR(spearman({1, 2, 2, 3, 5, 5, 5, 8}, {2, 1, 4, 4, 6, 9, 7, 7}), 0.8510794409931051, 1e-12);
  EXPECT_EQ(average_ranks({3, 1, 3}), (std::vector<double>{2.5, 1, 2.5}));
  EXPECT_THROW(pearson({1, 1, 1}, {1, 2, 3}), NumericalError);
}

TEST(Stats, LineFit) {
  const auto f = least_squares_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
  EXPECT_THROW(least_squares_line({1, 1}, {1, 2}), DomainError);
}

TEST(Stats, NormalQuantileAndBonferroni) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-10);
  EXPECT_NEAR(bonferroni_z(1), 3.0, 1e-10);
  EXPECT_GT(bonferroni_z(6), 3.4);
  EXPECT_LT(bonferroni_z(6), 3.6);
}
