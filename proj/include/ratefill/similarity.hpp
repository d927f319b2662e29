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

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ratefill/ratings.hpp"

namespace ratefill {

enum class SimilarityMetric { kPearson, kCosine, kSpearman, kKendall };

std::string_view to_string(SimilarityMetric metric);
/// Throws InvalidArgument for unknown names.
SimilarityMetric parse_metric(std::string_view name);

/// Symmetric users x users similarity. Pairs with too few co-observed items,
/// or with a zero-variance (zero-norm for cosine) side, are undefined, which
/// is distinct from a similarity of 0.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t n_users, SimilarityMetric metric,
                   std::size_t min_overlap);

  std::size_t n_users() const { return n_users_; }
  SimilarityMetric metric() const { return metric_; }
  std::size_t min_overlap() const { return min_overlap_; }

  bool defined(std::size_t u, std::size_t v) const {
    return !std::isnan(values_[u * n_users_ + v]);
  }
  std::optional<double> get(std::size_t u, std::size_t v) const {
    if (!defined(u, v)) return std::nullopt;
    return values_[u * n_users_ + v];
  }
  /// NaN when undefined.
  double raw(std::size_t u, std::size_t v) const {
    return values_[u * n_users_ + v];
  }
  void set(std::size_t u, std::size_t v, double value) {
    values_[u * n_users_ + v] = value;
    values_[v * n_users_ + u] = value;
  }

 private:
  std::size_t n_users_ = 0;
  SimilarityMetric metric_ = SimilarityMetric::kPearson;
  std::size_t min_overlap_ = 2;
  std::vector<double> values_;
};

// Two-vector kernels; return nullopt when the statistic is undefined.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);
std::optional<double> cosine(const std::vector<double>& x,
                             const std::vector<double>& y);
std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y);
/// Kendall tau-b (tie corrected).
std::optional<double> kendall_tau_b(const std::vector<double>& x,
                                    const std::vector<double>& y);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Similarity over items observed by both users. Correlation metrics
/// require min_overlap >= 2; cosine requires >= 1.
SimilarityMatrix compute_similarity(const RatingsMatrix& matrix,
                                    SimilarityMetric metric,
                                    std::size_t min_overlap = 2);

}  // namespace ratefill
