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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ratefill/ratings.hpp"
#include "ratefill/similarity.hpp"

namespace ratefill {

/// Dense model output. Unclipped predictions may leave the rating scale.
struct PredictionMatrix {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<double> values;
  bool clipped = false;

  PredictionMatrix() = default;
  PredictionMatrix(std::size_t users, std::size_t items, double fill = 0.0)
      : n_users(users), n_items(items), values(users * items, fill) {}

  double at(std::size_t u, std::size_t i) const { return values[u * n_items + i]; }
  double& at(std::size_t u, std::size_t i) { return values[u * n_items + i]; }
};

/// Clamps every value into [scale_min, scale_max] and marks the result clipped.
PredictionMatrix clip_predictions(PredictionMatrix pred, double scale_min,
                                  double scale_max);

// ---------------------------------------------------------------------------
// Mean imputation

struct MeanModel {
  /// NaN for items without a training observation.
  std::vector<double> item_means;
  double global_mean = 0.0;
  std::size_t n_users = 0;

  /// Item mean, or the global mean for items never observed in training.
  double predict(std::size_t item) const;
};

MeanModel fit_mean(const RatingsMatrix& train);
PredictionMatrix predict_mean(const MeanModel& model);

// ---------------------------------------------------------------------------
// User-based K nearest neighbours

struct KnnConfig {
  std::size_t k = 10;
  SimilarityMetric metric = SimilarityMetric::kPearson;
  std::size_t min_overlap = 2;
};

class KnnModel {
 public:
  KnnModel(KnnConfig config, SimilarityMatrix similarity, RatingsMatrix train,
           MeanModel fallback);

  const KnnConfig& config() const { return config_; }
  const SimilarityMatrix& similarity() const { return similarity_; }
  const RatingsMatrix& train() const { return train_; }
  const MeanModel& fallback() const { return fallback_; }

  /// Users with defined, strictly positive similarity to `user`, most similar
  /// first; ties keep the lower user index first.
  const std::vector<std::size_t>& ranked_candidates(std::size_t user) const {
    return ranked_[user];
  }

  /// The <= k neighbours used for (user, item): top-ranked candidates that
  /// rated the item in training.
  std::vector<std::size_t> neighbors(std::size_t user, std::size_t item) const;

 private:
  KnnConfig config_;
  SimilarityMatrix similarity_;
  RatingsMatrix train_;
  MeanModel fallback_;
  std::vector<std::vector<std::size_t>> ranked_;
};

KnnModel fit_knn(const RatingsMatrix& train, const KnnConfig& config = {});

/// Similarity-weighted neighbour average; falls back to the item mean when
/// no usable neighbour exists, and to the global mean when the item has no
/// training ratings at all.
double predict_knn(const KnnModel& model, std::size_t user, std::size_t item);
PredictionMatrix predict_knn(const KnnModel& model);

// ---------------------------------------------------------------------------
// Biased non-negative matrix factorization

enum class FactorInit {
  kHalfNormal,  // |N(0,1)| / scale
  kZeros,
};

enum class InitScaling {
  kByFactors,      // divide draws by f
  kBySqrtFactors,  // divide draws by sqrt(f)
};

enum class ClampMode {
  kPerUpdate,     // project after every rating's update
  kPerIteration,  // project once at the end of each pass
};

struct NnmfSgdConfig {
  double gamma = 0.001;
  /// 0 selects min(n_users, n_items).
  std::size_t factors = 0;
  double lambda_bi = 0.0;
  double lambda_bu = 0.0;
  double lambda_qi = 0.0;
  double lambda_pu = 0.0;
  double tol = 1e-6;
  int max_iters = 1000;
  std::uint64_t seed = 0;
  FactorInit init = FactorInit::kHalfNormal;
  InitScaling init_scaling = InitScaling::kByFactors;
  ClampMode clamp = ClampMode::kPerUpdate;
};

struct NnmfMultConfig {
  std::size_t factors = 0;
  double tol = 1e-6;
  int max_iters = 1000;
  std::uint64_t seed = 0;
};

enum class NnmfVariant { kSgd, kMultiplicative };

/// Fitted factorization; prediction is mu + b_u + b_i + q_i . p_u + shift.
struct NnmfModel {
  NnmfVariant variant = NnmfVariant::kSgd;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t factors = 0;
  double mu = 0.0;
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  /// n_users x factors, row u is p_u.
  std::vector<double> user_factors;
  /// factors x n_items, column i is q_i.
  std::vector<double> item_factors;
  /// Offset added back after a multiplicative fit on data with negative
  /// ratings; zero otherwise.
  double shift = 0.0;

  NnmfSgdConfig sgd;
  NnmfMultConfig mult;

  int iterations_run = 0;
  double final_rmse = 0.0;
  bool converged = false;
  /// Observed-set RMSE after each pass.
  std::vector<double> rmse_history;

  double interaction(std::size_t u, std::size_t i) const;
  double predict(std::size_t u, std::size_t i) const;
};

std::size_t default_factors(const RatingsMatrix& train);

NnmfModel fit_nnmf_sgd(const RatingsMatrix& train,
                       const NnmfSgdConfig& config = {});

/// Lee-Seung multiplicative updates with missing cells refilled from the
/// current reconstruction each sweep. Fits observed data very closely but
/// generalizes poorly to masked cells on sparse input.
NnmfModel fit_nnmf_mult(const RatingsMatrix& train,
                        const NnmfMultConfig& config = {});

PredictionMatrix predict_nnmf(const NnmfModel& model);

/// RMSE of a model's predictions over the observed cells of `matrix`.
double observed_rmse(const NnmfModel& model, const RatingsMatrix& matrix);

// ---------------------------------------------------------------------------
// Uniform dispatch for the evaluation harness and CLI

enum class EstimatorKind { kMean, kKnn, kNnmfSgd, kNnmfMult };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::kMean;
  /// Report label; defaults to the kind name.
  std::string label;
  KnnConfig knn;
  NnmfSgdConfig sgd;
  NnmfMultConfig mult;

  std::string name() const {
    return label.empty() ? std::string(to_string(kind)) : label;
  }
};

/// Fits the configured estimator on `train` and predicts every cell.
/// `seed_offset` is mixed into factorization seeds so repeated fits on
/// different masks draw independent initializations.
PredictionMatrix fit_predict(const EstimatorConfig& config,
                             const RatingsMatrix& train,
                             std::uint64_t seed_offset = 0);

}  // namespace ratefill
