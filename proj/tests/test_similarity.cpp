// Copyright 2026 The ratefill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ratefill/error.hpp"
#include "ratefill/similarity.hpp"
#include "support.hpp"

namespace ratefill {
namespace {

using testing::kNaN;

// Ranks by counting: 1 + #smaller + (#equal - 1) / 2.
std::vector<double> count_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t a = 0; a < v.size(); ++a) {
    double smaller = 0, equal = 0;
    for (double b : v) {
      if (b < v[a]) smaller += 1;
      if (b == v[a]) equal += 1;
    }
    r[a] = 1 + smaller + (equal - 1) / 2;
  }
  return r;
}

double plain_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    syy += y[k] * y[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

TEST(Pearson, PerfectCorrelationAndAnticorrelation) {
  EXPECT_DOUBLE_EQ(*pearson({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(*pearson({1, 2, 3}, {3, 2, 1}), -1.0);
}

TEST(Pearson, UndefinedForConstantOrShortVectors) {
  EXPECT_FALSE(pearson({2, 2, 2}, {1, 2, 3}).has_value());
  EXPECT_FALSE(pearson({1}, {1}).has_value());
}

TEST(Spearman, MatchesRankThenPearsonOracle) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 1, 4, 3};
  EXPECT_NEAR(*spearman(x, y), plain_pearson(count_ranks(x), count_ranks(y)), 1e-12);
  EXPECT_NEAR(*spearman(x, y), 0.6, 1e-12);

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(12), b(12);
    // coarse values so ties occur
    for (auto& v : a) v = std::floor(rng.uniform(0, 5));
    for (auto& v : b) v = std::floor(rng.uniform(0, 5));
    const auto s = spearman(a, b);
    const auto ra = count_ranks(a), rb = count_ranks(b);
    if (!s) continue;
    EXPECT_NEAR(*s, plain_pearson(ra, rb), 1e-12);
    EXPECT_EQ(average_ranks(a), ra);
  }
}

TEST(Kendall, TauBWithTies) {
  EXPECT_DOUBLE_EQ(*kendall_tau_b({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(*kendall_tau_b({1, 2, 3}, {3, 2, 1}), -1.0);
  // x = {1,1,2}, y = {1,2,3}: pairs (0,1) tied in x, (0,2) and (1,2) concordant
  // tau_b = 2 / sqrt(2 * 3)
  EXPECT_NEAR(*kendall_tau_b({1, 1, 2}, {1, 2, 3}), 2.0 / std::sqrt(6.0), 1e-15);
  EXPECT_FALSE(kendall_tau_b({1, 1, 1}, {1, 2, 3}).has_value());
}

TEST(Cosine, BasicValues) {
  EXPECT_DOUBLE_EQ(*cosine({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(*cosine({1, 2}, {2, 4}), 1.0, 1e-15);
  EXPECT_FALSE(cosine({0, 0}, {1, 1}).has_value());
}

TEST(ComputeSimilarity, OverlapThresholdAndDiagonal) {
  const auto m = testing::from_rows({{1, 2, 3, kNaN}, {1, 2, 3, 4}, {kNaN, kNaN, 5, 1}}, {0, 5});
  const auto sim = compute_similarity(m, SimilarityMetric::kPearson, 3);
  EXPECT_DOUBLE_EQ(sim.raw(0, 1), 1.0);
  EXPECT_FALSE(sim.defined(0, 2));  // one co-rated item
  EXPECT_FALSE(sim.defined(1, 2));  // two co-rated items < 3
  EXPECT_EQ(sim.raw(0, 0), 1.0);
  EXPECT_EQ(sim.raw(1, 1), 1.0);
  EXPECT_FALSE(sim.defined(2, 2));  // user 2 has only 2 ratings
}

TEST(ComputeSimilarity, RejectsTooSmallOverlap) {
  const auto m = testing::random_dense(3, 3, 1);
  EXPECT_THROW(compute_similarity(m, SimilarityMetric::kPearson, 1), InvalidArgument);
  EXPECT_NO_THROW(compute_similarity(m, SimilarityMetric::kCosine, 1));
  EXPECT_THROW(compute_similarity(m, SimilarityMetric::kCosine, 0), InvalidArgument);
}

TEST(ComputeSimilarity, MatchesPairwiseOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto dense = testing::random_dense(8, 12, seed);
    const auto m = apply_mask(dense, mask_random(dense, 0.5, seed));
    const auto sim = compute_similarity(m, SimilarityMetric::kPearson);
    for (std::size_t u = 0; u < 8; ++u) {
      for (std::size_t v = 0; v < 8; ++v) {
        if (u == v) continue;
        const double expect = testing::oracle_pearson(m, u, v, 2);
        EXPECT_EQ(std::isnan(expect), !sim.defined(u, v));
        if (!std::isnan(expect)) {
          EXPECT_NEAR(sim.raw(u, v), expect, 1e-12);
        }
      }
    }
  }
}

class SimilarityProperties : public ::testing::TestWithParam<SimilarityMetric> {};

TEST_P(SimilarityProperties, SymmetricBoundedAndPermutationInvariant) {
  const auto metric = GetParam();
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto dense = testing::random_dense(7, 15, seed);
    const auto m = apply_mask(dense, mask_random(dense, 0.3, seed));
    const auto sim = compute_similarity(m, metric);

    // same columns in reverse order
    RatingsMatrix flipped(m.user_labels(), m.item_labels(), m.scale());
    for (std::size_t u = 0; u < 7; ++u)
      for (std::size_t i = 0; i < 15; ++i)
        if (m.observed(u, 14 - i)) flipped.set(u, i, m.at(u, 14 - i));
    const auto sim_flipped = compute_similarity(flipped, metric);

    for (std::size_t u = 0; u < 7; ++u) {
      for (std::size_t v = 0; v < 7; ++v) {
        ASSERT_EQ(sim.defined(u, v), sim.defined(v, u));
        if (!sim.defined(u, v)) continue;
        EXPECT_EQ(sim.raw(u, v), sim.raw(v, u));
        EXPECT_GE(sim.raw(u, v), -1.0 - 1e-12);
        EXPECT_LE(sim.raw(u, v), 1.0 + 1e-12);
        EXPECT_NEAR(sim.raw(u, v), sim_flipped.raw(u, v), 1e-12);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllMetrics, SimilarityProperties,
                         ::testing::Values(SimilarityMetric::kPearson, SimilarityMetric::kCosine,
                                           SimilarityMetric::kSpearman,
                                           SimilarityMetric::kKendall),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(SimilarityInvariance, PearsonEqualsCosineForCenteredVectors) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(9), y(9);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 9;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / 9;
    for (auto& v : x) v -= mx;
    for (auto& v : y) v -= my;
    EXPECT_NEAR(*pearson(x, y), *cosine(x, y), 1e-12);
  }
}

TEST(SimilarityInvariance, AffineAndScaling) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(10), y(10), affine(10), scaled(10);
    for (auto& v : x) v = rng.uniform(1, 5);
    for (auto& v : y) v = rng.uniform(1, 5);
    const double a = rng.uniform(0.1, 10), b = rng.uniform(-5, 5);
    for (std::size_t k = 0; k < 10; ++k) {
      affine[k] = a * x[k] + b;
      scaled[k] = a * x[k];
    }
    EXPECT_NEAR(*pearson(affine, y), *pearson(x, y), 1e-12);
    EXPECT_NEAR(*cosine(scaled, y), *cosine(x, y), 1e-12);
  }
}

TEST(SimilarityMetricNames, ParseAndPrint) {
  for (auto m : {SimilarityMetric::kPearson, SimilarityMetric::kCosine, SimilarityMetric::kSpearman,
                 SimilarityMetric::kKendall}) {
    EXPECT_EQ(parse_metric(to_string(m)), m);
  }
  EXPECT_THROW(parse_metric("jaccard"), InvalidArgument);
}

}  // namespace
}  // namespace ratefill
