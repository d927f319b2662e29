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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ratefill/estimators.hpp"
#include "ratefill/ratings.hpp"
#include "ratefill/rng.hpp"

namespace ratefill::testing {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::vector<std::string> labels(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::string digits = std::to_string(k);
    out.push_back(prefix + std::string(3 - std::min<std::size_t>(3, digits.size()), '0') + digits);
  }
  return out;
}

/// Builds a matrix from literal rows; NaN marks a missing cell.
inline RatingsMatrix from_rows(const std::vector<std::vector<double>>& rows, ScaleBounds scale) {
  RatingsMatrix m(labels("u", rows.size()), labels("i", rows.empty() ? 0 : rows[0].size()), scale);
  for (std::size_t u = 0; u < rows.size(); ++u) {
    for (std::size_t i = 0; i < rows[u].size(); ++i) {
      if (!std::isnan(rows[u][i])) m.set(u, i, rows[u][i]);
    }
  }
  return m;
}

inline RatingsMatrix random_dense(std::size_t users, std::size_t items, std::uint64_t seed,
                                  ScaleBounds scale = {1.0, 5.0}) {
  RatingsMatrix m(labels("u", users), labels("i", items), scale);
  Rng rng(seed);
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t i = 0; i < items; ++i) m.set(u, i, rng.uniform(scale.min, scale.max));
  }
  return m;
}

/// Textbook sample correlation over co-observed items.
inline double oracle_pearson(const RatingsMatrix& m, std::size_t u, std::size_t v,
                             std::size_t min_overlap) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    if (m.observed(u, i) && m.observed(v, i)) {
      x.push_back(m.at(u, i));
      y.push_back(m.at(v, i));
    }
  }
  if (x.size() < min_overlap || x.size() < 2) return kNaN;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return kNaN;
  return std::fmax(-1.0, std::fmin(1.0, sxy / std::sqrt(sxx * syy)));
}

/// Brute-force user KNN. For each cell, neighbours are the raters of the item
/// with positive similarity; a rater is kept when fewer than k other raters
/// outrank it (higher similarity, or equal similarity and lower index).
inline PredictionMatrix oracle_knn(const RatingsMatrix& train, std::size_t k,
                                   std::size_t min_overlap = 2) {
  const std::size_t n_u = train.n_users();
  const std::size_t n_i = train.n_items();
  std::vector<double> sim(n_u * n_u, kNaN);
  for (std::size_t u = 0; u < n_u; ++u) {
    for (std::size_t v = 0; v < n_u; ++v) {
      if (u != v) sim[u * n_u + v] = oracle_pearson(train, u, v, min_overlap);
    }
  }

  double global_sum = 0.0;
  std::size_t global_n = 0;
  std::vector<double> item_mean(n_i, kNaN);
  for (std::size_t i = 0; i < n_i; ++i) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t u = 0; u < n_u; ++u) {
      if (train.observed(u, i)) {
        s += train.at(u, i);
        ++n;
      }
    }
    global_sum += s;
    global_n += n;
    if (n > 0) item_mean[i] = s / static_cast<double>(n);
  }
  const double global_mean = global_sum / static_cast<double>(global_n);

  PredictionMatrix out(n_u, n_i);
  for (std::size_t u = 0; u < n_u; ++u) {
    for (std::size_t i = 0; i < n_i; ++i) {
      std::vector<std::size_t> pool;
      for (std::size_t v = 0; v < n_u; ++v) {
        const double s = sim[u * n_u + v];
        if (v != u && train.observed(v, i) && !std::isnan(s) && s > 0.0) pool.push_back(v);
      }
      double num = 0.0, den = 0.0;
      std::size_t used = 0;
      for (std::size_t v : pool) {
        const double sv = sim[u * n_u + v];
        std::size_t better = 0;
        for (std::size_t w : pool) {
          const double sw = sim[u * n_u + w];
          if (sw > sv || (sw == sv && w < v)) ++better;
        }
        if (better < k) {
          num += sv * train.at(v, i);
          den += sv;
          ++used;
        }
      }
      if (used > 0) {
        out.at(u, i) = num / den;
      } else if (!std::isnan(item_mean[i])) {
        out.at(u, i) = item_mean[i];
      } else {
        out.at(u, i) = global_mean;
      }
    }
  }
  return out;
}

}  // namespace ratefill::testing
