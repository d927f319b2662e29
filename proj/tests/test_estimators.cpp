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

#include <bit>
#include <cmath>
#include <filesystem>

#include "ratefill/error.hpp"
#include "ratefill/estimators.hpp"
#include "ratefill/serialization.hpp"
#include "support.hpp"

namespace ratefill {
namespace {

using testing::kNaN;

// ---------------------------------------------------------------------------
// Mean model

TEST(MeanModel, ItemMeanAndGlobalFallback) {
  const auto m = testing::from_rows({{2, kNaN, 1}, {4, kNaN, 10}}, {0, 10});
  const auto model = fit_mean(m);
  EXPECT_EQ(model.item_means[0], 3.0);
  EXPECT_TRUE(std::isnan(model.item_means[1]));
  EXPECT_EQ(model.global_mean, (2 + 4 + 1 + 10) / 4.0);
  const auto pred = predict_mean(model);
  EXPECT_EQ(pred.at(0, 0), 3.0);
  EXPECT_EQ(pred.at(1, 0), 3.0);
  EXPECT_EQ(pred.at(0, 1), model.global_mean);
  EXPECT_EQ(pred.at(1, 2), 5.5);
}

TEST(MeanModel, UnobservedItemUsesGlobalMean) {
  const auto m = testing::from_rows({{5, kNaN}, {6, kNaN}}, {0, 10});
  EXPECT_EQ(predict_mean(fit_mean(m)).at(0, 1), 5.5);
}

TEST(MeanModel, MatchesColumnTally) {
  const auto dense = testing::random_dense(10, 10, 21);
  const auto train = apply_mask(dense, mask_random(dense, 0.5, 21));
  const auto model = fit_mean(train);
  for (std::size_t i = 0; i < 10; ++i) {
    double sum = 0;
    int n = 0;
    for (std::size_t u = 0; u < 10; ++u) {
      if (train.observed(u, i)) {
        sum += train.at(u, i);
        ++n;
      }
    }
    if (n == 0) {
      EXPECT_TRUE(std::isnan(model.item_means[i]));
    } else {
      EXPECT_NEAR(model.item_means[i], sum / n, 1e-12);
    }
  }
}

TEST(MeanModel, ConstantMatrixPredictsConstant) {
  RatingsMatrix m(testing::labels("u", 6), testing::labels("i", 6), {0, 10});
  for (std::size_t u = 0; u < 6; ++u)
    for (std::size_t i = 0; i < 6; ++i) m.set(u, i, 4.25);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pred = predict_mean(fit_mean(apply_mask(m, mask_random(m, 0.7, seed))));
    for (double v : pred.values) EXPECT_EQ(v, 4.25);
  }
}

TEST(MeanModel, EmptyTrainingSet) {
  RatingsMatrix m(testing::labels("u", 2), testing::labels("i", 2), {0, 1});
  EXPECT_THROW(fit_mean(m), EmptyTrainingSet);
}

TEST(MeanModel, InvariantToUserPermutation) {
  const auto dense = testing::random_dense(6, 9, 31);
  const auto train = apply_mask(dense, mask_random(dense, 0.4, 31));
  RatingsMatrix reversed(train.user_labels(), train.item_labels(), train.scale());
  for (std::size_t u = 0; u < 6; ++u)
    for (std::size_t i = 0; i < 9; ++i)
      if (train.observed(5 - u, i)) reversed.set(u, i, train.at(5 - u, i));
  const auto a = predict_mean(fit_mean(train));
  const auto b = predict_mean(fit_mean(reversed));
  for (std::size_t u = 0; u < 6; ++u)
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(a.at(u, i), b.at(u, i), 1e-12);
}

// ---------------------------------------------------------------------------
// KNN

TEST(Knn, IdenticalUsersAreMutualNeighbours) {
  const auto m = testing::from_rows({{1, 2, 3, 4}, {1, 2, 3, 4}}, {0, 5});
  const auto model = fit_knn(m);
  EXPECT_EQ(model.ranked_candidates(0), (std::vector<std::size_t>{1}));
  EXPECT_EQ(model.ranked_candidates(1), (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(model.similarity().raw(0, 1), 1.0);
}

TEST(Knn, KIsAMaximum) {
  const auto m = testing::random_dense(5, 12, 40);
  const auto model = fit_knn(m, {.k = 10});
  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t i = 0; i < 12; ++i) EXPECT_LE(model.neighbors(u, i).size(), 4u);
  }
}

TEST(Knn, AnticorrelatedUsersAreExcluded) {
  const auto m = testing::from_rows({{1, 2, 3, kNaN}, {3, 2, 1, 4}}, {0, 5});
  const auto model = fit_knn(m);
  EXPECT_TRUE(model.ranked_candidates(0).empty());
  EXPECT_TRUE(model.ranked_candidates(1).empty());
  // no neighbour, so user 0's missing item falls back to the item mean
  EXPECT_EQ(predict_knn(model, 0, 3), 4.0);
}

KnnModel hand_built(const RatingsMatrix& train, const std::vector<std::pair<std::size_t, double>>& sims) {
  SimilarityMatrix sim(train.n_users(), SimilarityMetric::kPearson, 2);
  for (const auto& [v, s] : sims) sim.set(0, v, s);
  return KnnModel({.k = 10}, sim, train, fit_mean(train));
}

TEST(Knn, SingleNeighbourIdentity) {
  const auto train = testing::from_rows({{kNaN}, {7}}, {0, 10});
  EXPECT_EQ(predict_knn(hand_built(train, {{1, 1.0}}), 0, 0), 7.0);
}

TEST(Knn, WeightedAverage) {
  const auto train = testing::from_rows({{kNaN}, {2}, {8}}, {0, 10});
  EXPECT_DOUBLE_EQ(predict_knn(hand_built(train, {{1, 0.5}, {2, 0.25}}), 0, 0), 4.0);
}

TEST(Knn, TiesPreferLowerIndex) {
  const auto train = testing::from_rows({{kNaN}, {2}, {8}, {5}}, {0, 10});
  SimilarityMatrix sim(4, SimilarityMetric::kPearson, 2);
  sim.set(0, 1, 0.5);
  sim.set(0, 2, 0.5);
  sim.set(0, 3, 0.5);
  const KnnModel model({.k = 2}, sim, train, fit_mean(train));
  EXPECT_EQ(model.neighbors(0, 0), (std::vector<std::size_t>{1, 2}));
  EXPECT_DOUBLE_EQ(predict_knn(model, 0, 0), 5.0);
}

TEST(Knn, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto dense = testing::random_dense(8, 12, seed);
    const auto train = apply_mask(dense, mask_random(dense, 0.4, seed));
    const auto got = predict_knn(fit_knn(train, {.k = 3}));
    const auto want = testing::oracle_knn(train, 3);
    for (std::size_t c = 0; c < got.values.size(); ++c) {
      EXPECT_NEAR(got.values[c], want.values[c], 1e-10) << "seed " << seed << " cell " << c;
    }
  }
}

TEST(Knn, EquivariantUnderUserPermutation) {
  const auto dense = testing::random_dense(7, 10, 50);
  const auto train = apply_mask(dense, mask_random(dense, 0.3, 50));
  const std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
  RatingsMatrix permuted(train.user_labels(), train.item_labels(), train.scale());
  for (std::size_t u = 0; u < 7; ++u)
    for (std::size_t i = 0; i < 10; ++i)
      if (train.observed(perm[u], i)) permuted.set(u, i, train.at(perm[u], i));
  const auto a = predict_knn(fit_knn(train, {.k = 3}));
  const auto b = predict_knn(fit_knn(permuted, {.k = 3}));
  for (std::size_t u = 0; u < 7; ++u)
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(b.at(u, i), a.at(perm[u], i), 1e-12);
}

TEST(Knn, RejectsZeroK) {
  const auto m = testing::random_dense(3, 3, 1);
  EXPECT_THROW(fit_knn(m, {.k = 0}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// NNMF with SGD

double min_factor(const NnmfModel& model) {
  double lo = INFINITY;
  for (double v : model.user_factors) lo = std::min(lo, v);
  for (double v : model.item_factors) lo = std::min(lo, v);
  return lo;
}

TEST(NnmfSgd, DefaultHyperparameters) {
  const NnmfSgdConfig c;
  EXPECT_EQ(c.gamma, 0.001);
  EXPECT_EQ(c.factors, 0u);
  EXPECT_EQ(c.lambda_bi, 0.0);
  EXPECT_EQ(c.lambda_bu, 0.0);
  EXPECT_EQ(c.lambda_qi, 0.0);
  EXPECT_EQ(c.lambda_pu, 0.0);
  EXPECT_EQ(c.tol, 1e-6);
  EXPECT_EQ(c.max_iters, 1000);
  const auto m = testing::random_dense(4, 7, 1);
  EXPECT_EQ(default_factors(m), 4u);
  EXPECT_EQ(fit_nnmf_sgd(m, {.max_iters = 2}).factors, 4u);
}

TEST(NnmfSgd, SingleRatingIsAlreadyConverged) {
  RatingsMatrix m(testing::labels("u", 1), testing::labels("i", 1), {0, 10});
  m.set(0, 0, 6.5);
  const auto model = fit_nnmf_sgd(m, {.factors = 1, .init = FactorInit::kZeros});
  EXPECT_EQ(model.mu, 6.5);
  EXPECT_EQ(model.user_bias[0], 0.0);
  EXPECT_EQ(model.item_bias[0], 0.0);
  EXPECT_EQ(model.user_factors[0], 0.0);
  EXPECT_EQ(model.item_factors[0], 0.0);
  EXPECT_EQ(model.predict(0, 0), 6.5);
}

TEST(NnmfSgd, NonNegativeAfterEveryIteration) {
  const auto dense = testing::random_dense(6, 8, 60, {0, 100});
  const auto train = apply_mask(dense, mask_random(dense, 0.5, 60));
  for (int iters = 1; iters <= 6; ++iters) {
    for (auto clamp : {ClampMode::kPerUpdate, ClampMode::kPerIteration}) {
      const auto model =
          fit_nnmf_sgd(train, {.gamma = 0.01, .max_iters = iters, .seed = 3, .clamp = clamp});
      EXPECT_GE(min_factor(model), 0.0) << iters;
    }
  }
}

TEST(NnmfSgd, ConvergedRmseNotAboveFirstPass) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto dense = testing::random_dense(10, 12, seed, {0, 100});
    const auto train = apply_mask(dense, mask_random(dense, 0.3, seed));
    const auto model = fit_nnmf_sgd(train, {.seed = seed});
    ASSERT_FALSE(model.rmse_history.empty());
    EXPECT_LE(model.final_rmse, model.rmse_history.front());
    EXPECT_EQ(model.iterations_run, static_cast<int>(model.rmse_history.size()));
    EXPECT_NEAR(observed_rmse(model, train), model.final_rmse, 1e-9);
  }
}

TEST(NnmfSgd, BiasOnlyFitRecoversAdditiveModel) {
  // r = mu + b_u + b_i exactly, on a 0-10 scale
  const std::vector<double> bu{-1.0, 0.5, 1.5, -0.5, 0.0, 1.0};
  const std::vector<double> bi{-2.0, 1.0, 0.0, 2.0, -1.0, 0.5, 1.5, -0.5};
  RatingsMatrix m(testing::labels("u", 6), testing::labels("i", 8), {0, 10});
  for (std::size_t u = 0; u < 6; ++u)
    for (std::size_t i = 0; i < 8; ++i) m.set(u, i, 5.0 + bu[u] + bi[i]);
  const auto mask = mask_random(m, 0.3, 7);
  const auto model = fit_nnmf_sgd(
      apply_mask(m, mask),
      {.gamma = 0.01, .factors = 1, .tol = 1e-12, .max_iters = 5000, .init = FactorInit::kZeros});
  EXPECT_EQ(min_factor(model), 0.0);
  double sq = 0;
  const auto cells = mask.test_cells();
  for (const auto& c : cells) sq += std::pow(model.predict(c.user, c.item) - m.at(c.user, c.item), 2);
  EXPECT_LT(std::sqrt(sq / cells.size()), 1e-3 * 10);
}

TEST(NnmfSgd, DeterministicForFixedSeed) {
  const auto dense = testing::random_dense(7, 9, 70, {0, 100});
  const auto train = apply_mask(dense, mask_random(dense, 0.4, 70));
  const auto a = fit_nnmf_sgd(train, {.max_iters = 50, .seed = 9});
  const auto b = fit_nnmf_sgd(train, {.max_iters = 50, .seed = 9});
  const auto c = fit_nnmf_sgd(train, {.max_iters = 50, .seed = 10});
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
  EXPECT_NE(model_to_json(a).dump(), model_to_json(c).dump());
  for (std::size_t k = 0; k < a.user_factors.size(); ++k) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.user_factors[k]),
              std::bit_cast<std::uint64_t>(b.user_factors[k]));
  }
}

TEST(NnmfSgd, DivergenceIsReported) {
  const auto m = testing::random_dense(5, 5, 80, {0, 1e6});
  EXPECT_THROW(fit_nnmf_sgd(m, {.gamma = 50.0, .max_iters = 200}), DivergedError);
}

TEST(NnmfSgd, RejectsInvalidConfig) {
  const auto m = testing::random_dense(3, 3, 1);
  EXPECT_THROW(fit_nnmf_sgd(m, {.gamma = 0.0}), InvalidArgument);
  EXPECT_THROW(fit_nnmf_sgd(m, {.lambda_bi = -1.0}), InvalidArgument);
  RatingsMatrix empty(testing::labels("u", 2), testing::labels("i", 2), {0, 1});
  EXPECT_THROW(fit_nnmf_sgd(empty), EmptyTrainingSet);
}

TEST(NnmfSgd, DenseRankOneReconstruction) {
  RatingsMatrix m(testing::labels("u", 8), testing::labels("i", 10), {0, 100});
  Rng rng(90);
  std::vector<double> w(8), h(10);
  for (auto& x : w) x = rng.uniform(0.2, 1.0);
  for (auto& x : h) x = rng.uniform(0.2, 1.0);
  for (std::size_t u = 0; u < 8; ++u)
    for (std::size_t i = 0; i < 10; ++i) m.set(u, i, 100 * w[u] * h[i]);
  const auto model = fit_nnmf_sgd(m, {.seed = 1});
  EXPECT_LT(observed_rmse(model, m), 1e-2 * 100);
}

RatingsMatrix permute_users(const RatingsMatrix& m, const std::vector<std::size_t>& perm) {
  std::vector<std::string> users;
  for (std::size_t u : perm) users.push_back(m.user_labels()[u]);
  RatingsMatrix out(users, m.item_labels(), m.scale());
  for (std::size_t u = 0; u < perm.size(); ++u)
    for (std::size_t i = 0; i < m.n_items(); ++i)
      if (m.observed(perm[u], i)) out.set(u, i, m.at(perm[u], i));
  return out;
}

TEST(Nnmf, EquivariantUnderUserPermutation) {
  const auto dense = testing::random_dense(6, 8, 95, {0, 10});
  const auto train = apply_mask(dense, mask_random(dense, 0.4, 95));
  const std::vector<std::size_t> perm{4, 2, 0, 5, 1, 3};
  const auto permuted = permute_users(train, perm);

  const auto a = predict_nnmf(fit_nnmf_sgd(train, {.max_iters = 40, .seed = 5}));
  const auto b = predict_nnmf(fit_nnmf_sgd(permuted, {.max_iters = 40, .seed = 5}));
  const auto c = predict_nnmf(fit_nnmf_mult(train, {.max_iters = 40, .seed = 5}));
  const auto d = predict_nnmf(fit_nnmf_mult(permuted, {.max_iters = 40, .seed = 5}));
  for (std::size_t u = 0; u < 6; ++u) {
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_NEAR(b.at(u, i), a.at(perm[u], i), 1e-12);
      EXPECT_NEAR(d.at(u, i), c.at(perm[u], i), 1e-12);
    }
  }
}

// ---------------------------------------------------------------------------
// Prediction arithmetic and clipping

NnmfModel tiny_model() {
  NnmfModel model;
  model.n_users = 1;
  model.n_items = 1;
  model.factors = 1;
  model.mu = 3.0;
  model.user_bias = {0.0};
  model.item_bias = {0.0};
  model.user_factors = {0.0};
  model.item_factors = {0.0};
  return model;
}

TEST(PredictNnmf, ZeroParametersPredictMu) {
  EXPECT_EQ(predict_nnmf(tiny_model()).at(0, 0), 3.0);
}

TEST(PredictNnmf, BiasedDotProduct) {
  auto model = tiny_model();
  model.user_bias = {1.0};
  model.item_bias = {2.0};
  model.user_factors = {1.0};
  model.item_factors = {0.5};
  EXPECT_EQ(predict_nnmf(model).at(0, 0), 6.5);
}

TEST(ClipPredictions, BoundsAndIdentity) {
  PredictionMatrix p(1, 3);
  p.values = {112.0, -3.0, 42.0};
  const auto c = clip_predictions(p, 0, 100);
  EXPECT_EQ(c.values, (std::vector<double>{100.0, 0.0, 42.0}));
  EXPECT_TRUE(c.clipped);
}

// ---------------------------------------------------------------------------
// Multiplicative NNMF

TEST(NnmfMult, DenseRankTwoReconstruction) {
  RatingsMatrix m(testing::labels("u", 10), testing::labels("i", 12), {0, 100});
  Rng rng(100);
  std::vector<double> w(20), h(24);
  for (auto& x : w) x = rng.uniform();
  for (auto& x : h) x = rng.uniform();
  for (std::size_t u = 0; u < 10; ++u)
    for (std::size_t i = 0; i < 12; ++i)
      m.set(u, i, 50 * (w[2 * u] * h[i] + w[2 * u + 1] * h[12 + i]));
  const auto model = fit_nnmf_mult(m, {.tol = 1e-12, .max_iters = 5000, .seed = 2});
  EXPECT_LT(observed_rmse(model, m) / 100, 1e-3);
  EXPECT_GE(min_factor(model), 0.0);
}

TEST(NnmfMult, NonNegativeAfterEverySweep) {
  const auto dense = testing::random_dense(6, 8, 101, {0, 100});
  const auto train = apply_mask(dense, mask_random(dense, 0.6, 101));
  for (int iters = 1; iters <= 8; ++iters) {
    const auto model = fit_nnmf_mult(train, {.max_iters = iters, .seed = 4});
    EXPECT_GE(min_factor(model), 0.0);
    EXPECT_EQ(model.user_bias, std::vector<double>(6, 0.0));
  }
}

TEST(NnmfMult, NegativeRatingsAreShifted) {
  const auto dense = testing::random_dense(5, 6, 102, {-3, 3});
  const auto model = fit_nnmf_mult(dense, {.max_iters = 200, .seed = 1});
  EXPECT_LT(model.shift, 0.0);
  EXPECT_GE(min_factor(model), 0.0);
  EXPECT_LT(observed_rmse(model, dense), 1.0);
}

// ---------------------------------------------------------------------------
// Dispatch and persistence

TEST(FitPredict, SeedOffsetChangesFactorizationOnly) {
  const auto dense = testing::random_dense(6, 7, 110, {0, 100});
  const auto train = apply_mask(dense, mask_random(dense, 0.5, 110));
  EstimatorConfig sgd{.kind = EstimatorKind::kNnmfSgd};
  sgd.sgd.max_iters = 20;
  EXPECT_EQ(fit_predict(sgd, train, 0).values, predict_nnmf(fit_nnmf_sgd(train, sgd.sgd)).values);
  EXPECT_NE(fit_predict(sgd, train, 5).values, fit_predict(sgd, train, 6).values);
  const EstimatorConfig mean{.kind = EstimatorKind::kMean};
  EXPECT_EQ(fit_predict(mean, train, 5).values, fit_predict(mean, train, 6).values);
}

TEST(EstimatorNames, ParseAndPrint) {
  for (auto k : {EstimatorKind::kMean, EstimatorKind::kKnn, EstimatorKind::kNnmfSgd,
                 EstimatorKind::kNnmfMult}) {
    EXPECT_EQ(parse_estimator_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_estimator_kind("svd++"), InvalidArgument);
}

TEST(Serialization, RoundTripIsExact) {
  const auto dense = testing::random_dense(5, 6, 120, {0, 100});
  const auto model = fit_nnmf_sgd(dense, {.max_iters = 30, .seed = 12});
  const auto path = std::filesystem::temp_directory_path() / "ratefill_model_roundtrip.json";
  save_model(model, path.string());
  const auto loaded = load_model(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.mu, model.mu);
  EXPECT_EQ(loaded.user_bias, model.user_bias);
  EXPECT_EQ(loaded.item_bias, model.item_bias);
  EXPECT_EQ(loaded.user_factors, model.user_factors);
  EXPECT_EQ(loaded.item_factors, model.item_factors);
  EXPECT_EQ(loaded.iterations_run, model.iterations_run);
  EXPECT_EQ(loaded.final_rmse, model.final_rmse);
  EXPECT_EQ(loaded.sgd.seed, 12u);
  EXPECT_EQ(predict_nnmf(loaded).values, predict_nnmf(model).values);

  const auto doc = model_to_json(model);
  for (const char* key : {"mu", "user_bias", "item_bias", "user_factors", "item_factors",
                          "hyperparameters", "seed", "convergence"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_EQ(doc["user_factors"].size(), 5u);
  EXPECT_EQ(doc["convergence"]["iterations_run"], model.iterations_run);
}

}  // namespace
}  // namespace ratefill
