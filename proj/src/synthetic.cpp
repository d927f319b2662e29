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

#include "ratefill/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "ratefill/error.hpp"
#include "ratefill/rng.hpp"

namespace ratefill {

namespace {

std::string padded(const char* prefix, std::size_t k, std::size_t count) {
  std::string digits = std::to_string(k);
  const std::size_t width = std::to_string(count).size();
  return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::vector<std::string> user_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t u = 0; u < n; ++u) names.push_back(padded("u", u + 1, n));
  return names;
}

std::vector<std::string> group_names(std::size_t n_groups, std::size_t per_group) {
  std::vector<std::string> labels;
  for (std::size_t g = 0; g < n_groups; ++g) {
    for (std::size_t k = 0; k < per_group; ++k) labels.push_back(padded("g", g + 1, n_groups));
  }
  return labels;
}

void check_common(std::size_t n_groups, std::size_t per_group, double noise_sd,
                  double lo, double hi) {
  if (n_groups < 1) throw InvalidArgument("n_groups must be at least 1");
  if (per_group < 1) throw InvalidArgument("users_per_group must be at least 1");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw InvalidArgument("noise_sd must be a non-negative number");
  }
  if (!(lo < hi)) throw InvalidArgument("scale_min must be below scale_max");
}

}  // namespace

void ClusterSpec::validate() const {
  check_common(n_groups, users_per_group, noise_sd, scale_min, scale_max);
  if (n_items < 1) throw InvalidArgument("n_items must be at least 1");
}

void TimeSeriesSpec::validate() const {
  check_common(n_groups, users_per_group, noise_sd, scale_min, scale_max);
  if (n_timepoints < 1) throw InvalidArgument("n_timepoints must be at least 1");
  if (!(period_seconds > 0.0)) throw InvalidArgument("period_seconds must be positive");
  if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample_rate_hz must be positive");
}

SyntheticData simulate_clusters(const ClusterSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<std::vector<double>> profiles(spec.n_groups, std::vector<double>(spec.n_items));
  for (std::size_t g = 0; g < spec.n_groups; ++g) {
    for (std::size_t i = 0; i < spec.n_items; ++i) {
      profiles[g][i] = (g == 1 && spec.n_groups == 2)
                           ? spec.scale_min + spec.scale_max - profiles[0][i]
                           : rng.uniform(spec.scale_min, spec.scale_max);
    }
  }

  const std::size_t n_users = spec.n_groups * spec.users_per_group;
  std::vector<std::string> items;
  for (std::size_t i = 0; i < spec.n_items; ++i) items.push_back(padded("i", i + 1, spec.n_items));
  SyntheticData data{RatingsMatrix(user_names(n_users), items, {spec.scale_min, spec.scale_max}),
                     group_names(spec.n_groups, spec.users_per_group)};
  for (std::size_t u = 0; u < n_users; ++u) {
    const auto& profile = profiles[u / spec.users_per_group];
    for (std::size_t i = 0; i < spec.n_items; ++i) {
      const double noise = spec.noise_sd > 0.0 ? spec.noise_sd * rng.normal() : 0.0;
      data.matrix.set(u, i, std::clamp(profile[i] + noise, spec.scale_min, spec.scale_max));
    }
  }
  return data;
}

SyntheticData simulate_timeseries(const TimeSeriesSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_users = spec.n_groups * spec.users_per_group;
  std::vector<std::string> items;
  for (std::size_t t = 0; t < spec.n_timepoints; ++t) {
    items.push_back(format_number(static_cast<double>(t) / spec.sample_rate_hz));
  }
  SyntheticData data{RatingsMatrix(user_names(n_users), items, {spec.scale_min, spec.scale_max}),
                     group_names(spec.n_groups, spec.users_per_group)};
  const double mid = 0.5 * (spec.scale_min + spec.scale_max);
  for (std::size_t u = 0; u < n_users; ++u) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(u / spec.users_per_group) /
                         static_cast<double>(spec.n_groups);
    for (std::size_t t = 0; t < spec.n_timepoints; ++t) {
      const double seconds = static_cast<double>(t) / spec.sample_rate_hz;
      const double signal =
          mid + spec.amplitude * std::sin(2.0 * std::numbers::pi * seconds / spec.period_seconds + phase);
      const double noise = spec.noise_sd > 0.0 ? spec.noise_sd * rng.normal() : 0.0;
      data.matrix.set(u, t, std::clamp(signal + noise, spec.scale_min, spec.scale_max));
    }
  }
  return data;
}

void write_tidy_csv(const SyntheticData& data, std::ostream& out) {
  const auto& m = data.matrix;
  out << "user,item,rating,group\n";
  for (const auto& [u, i] : m.observed_cells()) {
    out << m.user_labels()[u] << ',' << m.item_labels()[i] << ',' << format_number(m.at(u, i))
        << ',' << (data.group_labels.empty() ? "" : data.group_labels[u]) << '\n';
  }
}

}  // namespace ratefill
