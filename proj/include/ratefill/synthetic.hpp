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
#include <vector>

#include "ratefill/ratings.hpp"

namespace ratefill {

/// Users in each group share a latent item profile plus independent noise.
/// Group 0's profile is uniform over the scale; with exactly two groups the
/// second profile mirrors the first (min + max - p), otherwise every group
/// draws its own. Ratings are clipped to the scale.
struct ClusterSpec {
  std::size_t n_groups = 2;
  std::size_t users_per_group = 20;
  std::size_t n_items = 100;
  double noise_sd = 5.0;
  std::uint64_t seed = 0;
  double scale_min = 0.0;
  double scale_max = 100.0;

  /// Throws InvalidArgument for an unusable spec.
  void validate() const;
};

/// Phase-shifted sinusoids sampled on a uniform grid, one phase per group
/// (group g has phase 2*pi*g/n_groups), plus noise. Item labels are integer
/// sample offsets at `sample_rate_hz` = 1, or decimal seconds otherwise.
struct TimeSeriesSpec {
  std::size_t n_groups = 2;
  std::size_t users_per_group = 20;
  std::size_t n_timepoints = 600;
  double period_seconds = 120.0;
  double sample_rate_hz = 1.0;
  double amplitude = 30.0;
  double noise_sd = 5.0;
  std::uint64_t seed = 0;
  double scale_min = 0.0;
  double scale_max = 100.0;

  void validate() const;
};

struct SyntheticData {
  RatingsMatrix matrix;
  /// One label per matrix row.
  std::vector<std::string> group_labels;
};

SyntheticData simulate_clusters(const ClusterSpec& spec);
SyntheticData simulate_timeseries(const TimeSeriesSpec& spec);

/// Tidy CSV with a group column.
void write_tidy_csv(const SyntheticData& data, std::ostream& out);

}  // namespace ratefill
