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

#include "ratefill/similarity.hpp"

#include <algorithm>
#include <numeric>

#include "ratefill/error.hpp"

namespace ratefill {

std::string_view to_string(SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::kPearson:
      return "pearson";
    case SimilarityMetric::kCosine:
      return "cosine";
    case SimilarityMetric::kSpearman:
      return "spearman";
    case SimilarityMetric::kKendall:
      return "kendall";
  }
  return "unknown";
}

SimilarityMetric parse_metric(std::string_view name) {
  if (name == "pearson" || name == "correlation") return SimilarityMetric::kPearson;
  if (name == "cosine") return SimilarityMetric::kCosine;
  if (name == "spearman") return SimilarityMetric::kSpearman;
  if (name == "kendall") return SimilarityMetric::kKendall;
  throw InvalidArgument("unknown similarity metric '" + std::string(name) +
                        "' (expected pearson, cosine, spearman or kendall)");
}

SimilarityMatrix::SimilarityMatrix(std::size_t n_users,
                                   SimilarityMetric metric,
                                   std::size_t min_overlap)
    : n_users_(n_users),
      metric_(metric),
      min_overlap_(min_overlap),
      values_(n_users * n_users, std::nan("")) {}

namespace {

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return clamp_unit(sxy / std::sqrt(sxx * syy));
}

std::optional<double> cosine(const std::vector<double>& x,
                             const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 1 || y.size() != n) return std::nullopt;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += x[k] * y[k];
    sxx += x[k] * x[k];
    syy += y[k] * y[k];
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return clamp_unit(sxy / std::sqrt(sxx * syy));
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // positions start..end-1 hold ranks start+1..end
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() < 2 || y.size() != x.size()) return std::nullopt;
  return pearson(average_ranks(x), average_ranks(y));
}

std::optional<double> kendall_tau_b(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  // O(n^2) pair count; co-rated vectors here are at most a few hundred long
  double concordant_minus_discordant = 0.0;
  double untied_x = 0.0;
  double untied_y = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double dx = x[a] - x[b];
      const double dy = y[a] - y[b];
      if (dx != 0.0) untied_x += 1.0;
      if (dy != 0.0) untied_y += 1.0;
      if (dx != 0.0 && dy != 0.0) {
        concordant_minus_discordant += ((dx > 0.0) == (dy > 0.0)) ? 1.0 : -1.0;
      }
    }
  }
  if (untied_x <= 0.0 || untied_y <= 0.0) return std::nullopt;
  return clamp_unit(concordant_minus_discordant / std::sqrt(untied_x * untied_y));
}

SimilarityMatrix compute_similarity(const RatingsMatrix& matrix,
                                    SimilarityMetric metric,
                                    std::size_t min_overlap) {
  const std::size_t required = metric == SimilarityMetric::kCosine ? 1 : 2;
  if (min_overlap < required) {
    throw InvalidArgument("min_overlap must be at least " +
                          std::to_string(required) + " for " +
                          std::string(to_string(metric)));
  }

  const std::size_t n_users = matrix.n_users();
  const std::size_t n_items = matrix.n_items();
  SimilarityMatrix sim(n_users, metric, min_overlap);

  std::vector<double> x;
  std::vector<double> y;
  x.reserve(n_items);
  y.reserve(n_items);
  for (std::size_t u = 0; u < n_users; ++u) {
    std::size_t self_count = 0;
    for (std::size_t i = 0; i < n_items; ++i) {
      if (matrix.observed(u, i)) ++self_count;
    }
    if (self_count >= min_overlap) sim.set(u, u, 1.0);

    for (std::size_t v = u + 1; v < n_users; ++v) {
      x.clear();
      y.clear();
      for (std::size_t i = 0; i < n_items; ++i) {
        if (matrix.observed(u, i) && matrix.observed(v, i)) {
          x.push_back(matrix.at(u, i));
          y.push_back(matrix.at(v, i));
        }
      }
      if (x.size() < min_overlap) continue;

      std::optional<double> value;
      switch (metric) {
        case SimilarityMetric::kPearson:
          value = pearson(x, y);
          break;
        case SimilarityMetric::kCosine:
          value = cosine(x, y);
          break;
        case SimilarityMetric::kSpearman:
          value = spearman(x, y);
          break;
        case SimilarityMetric::kKendall:
          value = kendall_tau_b(x, y);
          break;
      }
      if (value) sim.set(u, v, *value);
    }
  }
  return sim;
}

}  // namespace ratefill
