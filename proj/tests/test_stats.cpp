// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "namegauge/rng.hpp"
#include "namegauge/stats.hpp"
#include "test_support.hpp"

namespace namegauge {
namespace {

using testing::throws_error;
using Vec = std::vector<double>;

// Reference values below were computed with scipy.stats.

TEST(Friedman, IdenticalRanksAndDegenerateTies) {
  const auto r = stats::friedman({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  EXPECT_NEAR(r.statistic, 6.0, 1e-12);
  EXPECT_EQ(r.df, 2.0);
  EXPECT_NEAR(r.p_value, std::exp(-3.0), 1e-12);
  const auto flat = stats::friedman({{4, 4, 4}, {4, 4, 4}});
  EXPECT_EQ(flat.statistic, 0.0);
  EXPECT_EQ(flat.p_value, 1.0);
}

TEST(Friedman, TieCorrectedReference) {
  const auto r = stats::friedman(
      {{1, 2, 2, 4}, {3, 1, 2, 2}, {5, 4, 6, 1}, {2, 2, 2, 3}, {7, 8, 1, 1}, {0.5, 3, 3, 9}});
  EXPECT_NEAR(r.statistic, 0.6923076923077022, 1e-10);
  EXPECT_NEAR(r.p_value, 0.8750117490815164, 1e-10);
}

TEST(Friedman, TwelveTreatmentsGiveElevenDf) {
  Rng rng(41);
  std::vector<Vec> blocks(30, Vec(12));
  for (auto& b : blocks) {
    for (auto& v : b) v = rng.uniform();
  }
  EXPECT_EQ(stats::friedman(blocks).df, 11.0);
}

TEST(Friedman, MonotoneTransformInvariance) {
  Rng rng(42);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vec> blocks(8, Vec(4)), moved(8, Vec(4));
    for (std::size_t b = 0; b < 8; ++b) {
      for (std::size_t j = 0; j < 4; ++j) {
        blocks[b][j] = std::round(rng.uniform() * 5);
        moved[b][j] = std::exp(blocks[b][j]) * 3 - 1;
      }
    }
    EXPECT_NEAR(stats::friedman(blocks).statistic, stats::friedman(moved).statistic, 1e-9);
  }
}

TEST(Friedman, Errors) {
  EXPECT_TRUE(throws_error([] { stats::friedman({{1, 2}, {1}}); }, ErrorKind::kInvalidData, "missing"));
  EXPECT_TRUE(throws_error([] { stats::friedman({{1}, {2}}); }, ErrorKind::kDomain));
}

TEST(MannWhitney, ExactSmallCase) {
  const Vec x = {1, 2, 3}, y = {4, 5, 6};
  const auto r = stats::mann_whitney_u(x, y);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_NEAR(r.p_value, 0.1, 1e-15);
  EXPECT_EQ(r.method, stats::Method::kMannWhitneyExact);
  const Vec a = {0.3, 1.9, 2.4, 4.1, 5.5}, b = {1.2, 3.3, 3.9, 6.0, 7.2, 8.1};
  const auto e = stats::mann_whitney_u(a, b);
  EXPECT_EQ(e.statistic, 8.0);
  EXPECT_NEAR(e.p_value, 0.24675324675324672, 1e-12);
}

TEST(MannWhitney, NormalApproximationWithTies) {
  const Vec x = {1.5, 2.5, 2.5, 4, 7, 8, 9.5}, y = {3, 3, 5, 6, 10, 11, 12, 13};
  const auto r = stats::mann_whitney_u(x, y);
  EXPECT_EQ(r.method, stats::Method::kMannWhitneyNormal);
  EXPECT_EQ(r.statistic, 14.0);
  EXPECT_NEAR(r.p_value, 0.11755506248619667, 1e-10);
}

TEST(MannWhitney, IdenticalSamplesAndBonferroni) {
  const Vec x = {1, 2, 3, 4};
  const auto r = stats::mann_whitney_u(x, x);
  EXPECT_EQ(r.statistic, 8.0);
  EXPECT_GE(r.p_value, 0.99);
  const Vec a = {0.1, 0.5, 0.9, 1.3, 2.0, 2.2, 3.1, 3.3}, b = {1.0, 2.5, 3.6, 4.0, 4.4, 5.0, 6.1, 7.7};
  const auto p = stats::mann_whitney_u(a, b, 3.0);
  EXPECT_DOUBLE_EQ(p.p_adjusted, std::min(1.0, 3.0 * p.p_value));
  EXPECT_EQ(stats::mann_whitney_u(x, x, 3.0).p_adjusted, 1.0);
}

TEST(MannWhitney, SymmetricAndBounded) {
  Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    Vec x(1 + rng.below(9)), y(1 + rng.below(9));
    for (auto& v : x) v = std::round(rng.normal() * 3);
    for (auto& v : y) v = std::round(rng.normal() * 3 + 1);
    const auto a = stats::mann_whitney_u(x, y), b = stats::mann_whitney_u(y, x);
    EXPECT_NEAR(a.p_value, b.p_value, 1e-12);
    EXPECT_GE(a.p_value, 0.0);
    EXPECT_LE(a.p_value, 1.0);
  }
  EXPECT_TRUE(throws_error([] { stats::mann_whitney_u(Vec{}, Vec{1.0}); }, ErrorKind::kDomain));
}

TEST(ShapiroWilk, PreconditionsAndHeavyTails) {
  EXPECT_TRUE(throws_error([] { stats::shapiro_wilk(Vec{1, 2}); }, ErrorKind::kDomain));
  EXPECT_TRUE(throws_error([] { stats::shapiro_wilk(Vec{3, 3, 3, 3}); }, ErrorKind::kDomain, "variance"));
  Rng rng(44);
  Vec cauchy(30);
  for (auto& v : cauchy) v = std::tan(3.14159265358979 * (rng.uniform() - 0.5));
  EXPECT_LT(stats::shapiro_wilk(cauchy).p_value, 0.05);
  Vec normal(30);
  for (auto& v : normal) v = rng.normal();
  const auto r = stats::shapiro_wilk(normal);
  EXPECT_GT(r.statistic, 0.0);
  EXPECT_LE(r.statistic, 1.0);
}

TEST(TTest, Examples) {
  const auto r = stats::t_test_two_sample(Vec{1, 2, 3}, Vec{2, 3, 4});
  EXPECT_NEAR(r.statistic, -std::sqrt(1.5), 1e-12);
  EXPECT_EQ(r.df, 4.0);
  const auto same = stats::t_test_two_sample(Vec{1, 2, 4}, Vec{1, 2, 4});
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_NEAR(same.p_value, 1.0, 1e-15);
  const auto ref = stats::t_test_two_sample(Vec{5.1, 4.8, 6.0, 5.5, 5.9}, Vec{4.2, 4.0, 4.9, 3.8, 4.4, 4.1});
  EXPECT_NEAR(ref.statistic, 4.548335023222007, 1e-10);
  EXPECT_NEAR(ref.p_value, 0.0013892436116244673, 1e-10);
  EXPECT_EQ(stats::t_test_two_sample(Vec(8, 1.0), Vec{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}).df, 16.0);
  EXPECT_TRUE(throws_error([] { stats::t_test_two_sample(Vec{1, 1}, Vec{2, 2}); }, ErrorKind::kDomain));
}

TEST(Fisher, Examples) {
  EXPECT_NEAR(stats::fisher_exact_2x2(3, 0, 0, 3).p_value, 0.1, 1e-12);
  EXPECT_NEAR(stats::fisher_exact_2x2(5, 5, 5, 5).p_value, 1.0, 1e-12);
  EXPECT_NEAR(stats::fisher_exact_2x2(1, 0, 0, 1).p_value, 1.0, 1e-12);
  const auto r = stats::fisher_exact_2x2(5, 2, 1, 6);
  EXPECT_NEAR(r.p_value, 0.10256410256410255, 1e-12);
  EXPECT_NEAR(r.statistic, 15.0, 1e-12);
  EXPECT_NEAR(stats::fisher_exact_2x2(7, 1, 2, 9).p_value, 0.005477494641581329, 1e-12);
  EXPECT_TRUE(throws_error([] { stats::fisher_exact_2x2(0, 0, 3, 4); }, ErrorKind::kDomain, "margin"));
}

TEST(Fisher, TransposeAndRowSwapInvariance) {
  Rng rng(45);
  for (int t = 0; t < 300; ++t) {
    const auto a = rng.below(8), b = rng.below(8), c = rng.below(8), d = rng.below(8);
    if (a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0) continue;
    const double p = stats::fisher_exact_2x2(a, b, c, d).p_value;
    EXPECT_NEAR(stats::fisher_exact_2x2(a, c, b, d).p_value, p, 1e-12);
    EXPECT_NEAR(stats::fisher_exact_2x2(c, d, a, b).p_value, p, 1e-12);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(ChiSquare, Examples) {
  const auto zero = stats::chi_square_independence({{10, 10}, {10, 10}});
  EXPECT_EQ(zero.statistic, 0.0);
  EXPECT_NEAR(zero.p_value, 1.0, 1e-15);
  const auto forty = stats::chi_square_independence({{20, 0}, {0, 20}});
  EXPECT_NEAR(forty.statistic, 40.0, 1e-12);
  EXPECT_EQ(forty.df, 1.0);
  const auto r = stats::chi_square_independence({{12, 5, 9}, {3, 10, 7}});
  EXPECT_EQ(r.df, 2.0);
  EXPECT_NEAR(r.statistic, 6.647147435897436, 1e-10);
  EXPECT_NEAR(r.p_value, 0.03602386231776529, 1e-10);
  EXPECT_TRUE(throws_error([] { stats::chi_square_independence({{0, 0}, {1, 2}}); }, ErrorKind::kDomain,
                           "expected"));
}

TEST(ChiSquare, MatchesTwoByTwoClosedForm) {
  Rng rng(46);
  for (int t = 0; t < 300; ++t) {
    const double a = 1 + rng.below(30), b = 1 + rng.below(30), c = 1 + rng.below(30), d = 1 + rng.below(30);
    const double n = a + b + c + d;
    const double closed = n * (a * d - b * c) * (a * d - b * c) / ((a + b) * (c + d) * (a + c) * (b + d));
    const double got = stats::chi_square_independence({{a, b}, {c, d}}).statistic;
    EXPECT_LE(std::abs(got - closed), 1e-10 * std::max(1.0, closed));
  }
}

}  // namespace
}  // namespace namegauge
