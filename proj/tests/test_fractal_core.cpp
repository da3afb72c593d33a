#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fshe/partition.hpp"

using namespace fshe;

namespace {

// every word of length n over {1..m}, in lexicographic order
std::vector<Word> all_words(int m, int n) {
  std::vector<Word> out;
  std::vector<std::uint8_t> letters(static_cast<std::size_t>(n), 1);
  while (true) {
    out.emplace_back(letters);
    int k = n - 1;
    while (k >= 0 && letters[static_cast<std::size_t>(k)] == m) letters[static_cast<std::size_t>(k--)] = 1;
    if (k < 0) break;
    ++letters[static_cast<std::size_t>(k)];
  }
  return out;
}

PcfStructure two_weight(double r1, double r2) {
  return interval(2).with_weights({r1, r2}, "uneven");
}

}  // namespace

TEST(Word, ParseAndOrder) {
  EXPECT_EQ(Word::parse("121"), (Word{1, 2, 1}));
  EXPECT_TRUE(Word::parse("-").empty());
  EXPECT_TRUE(Word::parse("").empty());
  EXPECT_EQ(Word::parse("10.2"), (Word{10, 2}));
  EXPECT_LT(Word({1, 2}), Word({2}));
  EXPECT_LT(Word({1}), Word({1, 1}));
  EXPECT_TRUE(Word({1}).is_prefix_of(Word({1, 2})));
  EXPECT_FALSE(Word({2}).is_prefix_of(Word({1, 2})));
  EXPECT_EQ(Word({3, 1}).to_string(), "31");
  EXPECT_FALSE(Word({3}).valid_for(2));
}

TEST(HausdorffDimension, Examples) {
  EXPECT_NEAR(solve_hausdorff_dimension({0.5, 0.5}), 1.0, 1e-12);
  EXPECT_NEAR(solve_hausdorff_dimension({0.6, 0.6, 0.6}), std::log(3.0) / std::log(5.0 / 3.0), 1e-12);
  EXPECT_NEAR(solve_hausdorff_dimension({0.6, 0.6}), std::log(2.0) / std::log(1.0 / 0.6), 1e-12);
  EXPECT_NEAR(gasket(2).hausdorff_dimension(), 2.1506601031, 1e-9);
}

TEST(HausdorffDimension, DefiningEquationHoldsForRandomWeights) {
  const std::vector<std::vector<double>> cases = {{0.1, 0.9}, {0.3, 0.3, 0.3, 0.3}, {0.99, 0.01}, {0.5, 0.25, 0.125}};
  for (const auto& r : cases) {
    const double s = solve_hausdorff_dimension(r);
    double sum = 0.0;
    for (double ri : r) sum += std::pow(ri, s);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(HausdorffDimension, RejectsBadWeights) {
  EXPECT_THROW(solve_hausdorff_dimension({0.5}), DomainError);
  EXPECT_THROW(solve_hausdorff_dimension({0.5, 1.0}), DomainError);
  EXPECT_THROW(solve_hausdorff_dimension({0.0, 0.5}), DomainError);
  EXPECT_THROW(solve_hausdorff_dimension({0.999, 0.999}), NumericalError);
}

TEST(SpectralDimension, Examples) {
  EXPECT_DOUBLE_EQ(spectral_dimension(1.0), 1.0);
  EXPECT_NEAR(spectral_dimension(std::log(3.0) / std::log(5.0 / 3.0)), 2.0 * std::log(3.0) / std::log(5.0), 1e-12);
  const double big = spectral_dimension(1e9);
  EXPECT_LT(big, 2.0);
  EXPECT_GT(big, 1.999999);
  EXPECT_THROW(spectral_dimension(0.0), DomainError);
  EXPECT_THROW(spectral_dimension(-1.0), DomainError);
}

TEST(Structure, PresetsAndValidation) {
  EXPECT_EQ(preset("gasket(2)").cells(), 3);
  EXPECT_EQ(preset(" interval( 5 ) ").cells(), 5);
  EXPECT_THROW(preset("carpet(2)"), DomainError);
  EXPECT_THROW(interval(1), DomainError);
  Eigen::MatrixXd bad(2, 2);
  bad << -1, 2, 1, -1;
  EXPECT_THROW(PcfStructure("bad", {0.5, 0.5}, bad, {}, {{1, 0}, {2, 1}}), DomainError);
  Eigen::MatrixXd reducible = Eigen::MatrixXd::Zero(3, 3);
  reducible << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  EXPECT_THROW(PcfStructure("bad", {0.5, 0.5}, reducible, {}, {{1, 0}, {2, 1}, {1, 1}}), DomainError);
  EXPECT_THROW(two_weight(0.5, 1.2), DomainError);
}

TEST(CellMeasure, Examples) {
  EXPECT_DOUBLE_EQ(cell_measure(gasket(2), Word{}), 1.0);
  EXPECT_NEAR(cell_measure(gasket(2), Word{1, 3}), 1.0 / 9.0, 1e-14);
  EXPECT_NEAR(cell_measure(interval(2), Word{1, 2, 1}), 0.125, 1e-15);
  EXPECT_THROW(cell_measure(interval(2), Word{3}), DomainError);
}

TEST(Partition, Examples) {
  const auto eq = build_partition(interval(2), 0.125);
  EXPECT_EQ(eq.words, all_words(2, 3));
  const auto uneven = build_partition(two_weight(0.5, 0.25), 0.25);
  EXPECT_EQ(uneven.words, (std::vector<Word>{Word{1, 1}, Word{1, 2}, Word{2}}));
  EXPECT_THROW(build_partition(interval(2), 1.0), DomainError);
  EXPECT_THROW(build_partition(interval(2), 0.0), DomainError);
  EXPECT_EQ(level_partition(gasket(2), 0).words, std::vector<Word>{Word{}});
}

// Brute-force oracle: Lambda(a) = every word whose scale is <= a while its parent's is > a.
TEST(Partition, MatchesExhaustiveEnumeration) {
  const std::vector<PcfStructure> structures = {two_weight(0.5, 0.25), two_weight(0.3, 0.7), gasket(2), interval(3)};
  for (const auto& s : structures) {
    for (double a : {0.4, 0.2, 0.05, 0.013}) {
      std::set<Word> expected;
      for (int len = 1; len <= 40; ++len) {
        for (const auto& w : all_words(s.cells(), len)) {
          if (s.resistance_scale(w) <= a && s.resistance_scale(w.prefix(w.size() - 1)) > a) expected.insert(w);
        }
        if (std::pow(s.r_max(), len) <= a) break;
      }
      const auto p = build_partition(s, a);
      EXPECT_EQ(p.words, std::vector<Word>(expected.begin(), expected.end())) << s.name() << " a=" << a;
      EXPECT_TRUE(is_valid_partition(s, p));
    }
  }
}

TEST(Partition, CensusAgreesWithEnumeration) {
  for (const auto& s : {two_weight(0.3, 0.7), gasket(2), gasket(3), interval(3), two_weight(0.45, 0.6)}) {
    for (int n = 1; n <= 6; ++n) {
      const auto p = level_partition(s, n);
      const auto c = level_census(s, n);
      double measure = 0.0;
      for (const auto& w : p.words) measure += cell_measure(s, w);
      EXPECT_EQ(c.count, p.size()) << s.name() << " n=" << n;
      EXPECT_NEAR(c.measure, measure, 1e-12);
      EXPECT_EQ(c.max_length, p.max_length());
    }
  }
}

TEST(Partition, CoveringEveryLongWord) {
  const auto s = two_weight(0.3, 0.7);
  const auto p = build_partition(s, 0.05);
  const auto len = static_cast<int>(p.max_length());
  for (const auto& w : all_words(2, len)) {
    int prefixes = 0;
    for (const auto& v : p.words) prefixes += v.is_prefix_of(w) ? 1 : 0;
    EXPECT_EQ(prefixes, 1) << w.to_string();
  }
}

TEST(Partition, ValidityRejectsBrokenSets) {
  const auto s = interval(2);
  Partition gap;
  gap.words = {Word{1}};
  EXPECT_FALSE(is_valid_partition(s, gap));
  Partition overlap;
  overlap.words = {Word{1}, Word{1, 1}, Word{2}};
  EXPECT_FALSE(is_valid_partition(s, overlap));
}

TEST(Refinement, Examples) {
  const auto s = interval(2);
  EXPECT_TRUE(verify_refinement(level_partition(s, 3), level_partition(s, 1)));
  const auto p = build_partition(gasket(2), 0.1);
  EXPECT_TRUE(verify_refinement(p, p));
  Partition fine;
  fine.words = {Word{1}, Word{2}};
  Partition coarse;
  coarse.words = {Word{1, 1}, Word{1, 2}, Word{2}};
  EXPECT_FALSE(verify_refinement(fine, coarse));
  EXPECT_TRUE(verify_refinement(coarse, fine));
}

TEST(Partition, LevelInvariants) {
  for (const auto& s : {interval(2), interval(3), gasket(2), two_weight(0.3, 0.7)}) {
    const double gap = (std::log(2.0) + std::log(1.0 / s.r_min())) / std::log(1.0 / s.r_max());
    for (int n = 0; n <= 10; ++n) {
      const auto c = level_census(s, n);
      const double low = std::pow(2.0, s.hausdorff_dimension() * n);
      EXPECT_LE(low, static_cast<double>(c.count) * (1 + 1e-12)) << s.name() << " n=" << n;
      EXPECT_LT(static_cast<double>(c.count), std::pow(s.r_min(), -s.hausdorff_dimension()) * low);
      EXPECT_NEAR(c.measure, 1.0, 1e-12);
      if (n <= 8) {
        const auto fine = level_partition(s, n + 1);
        const auto coarse = level_partition(s, n);
        EXPECT_TRUE(verify_refinement(fine, coarse));
        for (const auto& v : fine.words) {
          const auto w = coarse.prefix_of(v);
          ASSERT_TRUE(w.has_value());
          EXPECT_LT(static_cast<double>(v.size() - w->size()), gap);
        }
      }
    }
  }
}

TEST(Addressing, CanonicalClassesOnTheGasket) {
  const auto s = gasket(2);
  // the midpoint of q0 q1 is psi_1(q_1) = psi_2(q_0)
  const auto cls = equivalence_class(s, {Word{1}, 1}, 1);
  EXPECT_EQ(cls, (std::vector<VertexAddress>{{Word{1}, 1}, {Word{2}, 0}}));
  // a boundary point has a single representative at each depth
  EXPECT_EQ(equivalence_class(s, {Word{}, 2}, 3), (std::vector<VertexAddress>{{Word{3, 3, 3}, 2}}));
  // the gluing class and the coordinate class coincide at depth 3
  for (const auto& w : all_words(3, 3)) {
    for (int a = 0; a < 3; ++a) {
      const auto key = exact_coordinates(s, {w, a}, 3);
      for (const auto& rep : equivalence_class(s, {w, a}, 3)) EXPECT_EQ(exact_coordinates(s, rep, 3), key);
    }
  }
}

TEST(Addressing, ExactCoordinates) {
  const auto s = interval(2);
  EXPECT_EQ(exact_coordinates(s, {Word{1}, 1}, 1), (std::vector<std::int64_t>{1}));
  EXPECT_EQ(exact_coordinates(s, {Word{1, 2}, 0}, 3), (std::vector<std::int64_t>{2}));
  const auto g = gasket(2);
  EXPECT_EQ(exact_coordinates(g, {Word{2}, 0}, 1), (std::vector<std::int64_t>{1, 1, 0}));
}

TEST(Neighborhood, IntervalExamples) {
  const auto s = interval(2);
  EXPECT_EQ(neighborhood(s, 1, {Word{1}, 1}, 0).words, (std::vector<Word>{Word{1}, Word{2}}));
  const VertexAddress quarter{Word{1, 1}, 1};
  EXPECT_EQ(neighborhood(s, 1, quarter, 0).words, (std::vector<Word>{Word{1}}));
  EXPECT_EQ(neighborhood(s, 1, quarter, 1).words, (std::vector<Word>{Word{1}, Word{2}}));
  EXPECT_EQ(neighborhood(s, 0, quarter, 1).words, std::vector<Word>{Word{}});
  EXPECT_EQ(neighborhood(s, 3, {Word{}, 0}, 1).words, (std::vector<Word>{Word{1, 1, 1}, Word{1, 1, 2}}));
  EXPECT_THROW(neighborhood(s, 1, quarter, 2), DomainError);
  EXPECT_THROW(neighborhood(s, 1, {Word{3}, 0}, 0), DomainError);
}

TEST(Neighborhood, GasketJunction) {
  const auto s = gasket(2);
  const auto d0 = neighborhood(s, 1, {Word{1}, 1}, 0);
  EXPECT_EQ(d0.words, (std::vector<Word>{Word{1, 2}, Word{2, 1}}));
  const auto d1 = neighborhood(s, 1, {Word{1}, 1}, 1);
  EXPECT_EQ(d1.words, (std::vector<Word>{Word{1, 1}, Word{1, 2}, Word{1, 3}, Word{2, 1}, Word{2, 2}, Word{2, 3}}));
}

// Oracle for |D^1|: explicit neighbourhood construction at every corner of Lambda_n.
TEST(Neighborhood, MaximumMatchesExplicitConstruction) {
  for (const auto& s : {interval(2), gasket(2), two_weight(0.3, 0.7)}) {
    for (int n = 0; n <= 4; ++n) {
      const auto lambda = level_partition(s, n);
      std::size_t worst = 0;
      for (const auto& w : lambda.words) {
        for (int a = 0; a < s.boundary_size(); ++a) worst = std::max(worst, neighborhood(s, n, {w, a}, 1).words.size());
      }
      EXPECT_EQ(max_neighborhood_size(s, n), worst) << s.name() << " n=" << n;
    }
  }
}

TEST(Neighborhood, BoundedAcrossLevels) {
  for (const auto& s : {interval(2), interval(3), gasket(2), gasket(3)}) {
    std::size_t worst = 0;
    const int top = s.cells() > 3 ? 4 : 6;
    for (int n = 0; n <= top; ++n) worst = std::max(worst, max_neighborhood_size(s, n));
    EXPECT_LE(worst, static_cast<std::size_t>(2 * s.cells() * s.cells())) << s.name();
  }
}
