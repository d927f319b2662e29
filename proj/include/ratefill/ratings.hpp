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
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ratefill {

/// One row of a long-form ("tidy") ratings table. For time-series data the
/// item label is a time offset in seconds.
struct RatingRecord {
  std::string user;
  std::string item;
  double rating = 0.0;
};

struct ScaleBounds {
  double min = 0.0;
  double max = 0.0;
  double range() const { return max - min; }
};

struct Cell {
  std::size_t user = 0;
  std::size_t item = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Dense users x items grid. Missing entries are stored as NaN; observed
/// entries are always finite, so NaN is unambiguous.
class RatingsMatrix {
 public:
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  RatingsMatrix() = default;
  /// All entries start missing. Labels must be unique; scale.min < scale.max.
  RatingsMatrix(std::vector<std::string> user_labels,
                std::vector<std::string> item_labels, ScaleBounds scale);

  std::size_t n_users() const { return user_labels_.size(); }
  std::size_t n_items() const { return item_labels_.size(); }
  std::size_t size() const { return values_.size(); }

  const std::vector<std::string>& user_labels() const { return user_labels_; }
  const std::vector<std::string>& item_labels() const { return item_labels_; }
  const ScaleBounds& scale() const { return scale_; }

  bool observed(std::size_t u, std::size_t i) const {
    return !std::isnan(values_[u * n_items() + i]);
  }
  double at(std::size_t u, std::size_t i) const {
    return values_[u * n_items() + i];
  }
  std::optional<double> get(std::size_t u, std::size_t i) const;

  /// Throws InvalidValue for non-finite values.
  void set(std::size_t u, std::size_t i, double value);
  void erase(std::size_t u, std::size_t i) {
    values_[u * n_items() + i] = kMissing;
  }

  std::size_t count_observed() const;
  std::vector<Cell> observed_cells() const;

  /// Row-major raw view; NaN marks missing.
  const std::vector<double>& raw() const { return values_; }

  friend bool operator==(const RatingsMatrix& a, const RatingsMatrix& b);

 private:
  std::vector<std::string> user_labels_;
  std::vector<std::string> item_labels_;
  ScaleBounds scale_;
  std::vector<double> values_;
};

/// Bit-exact comparison, treating missing == missing.
bool operator==(const RatingsMatrix& a, const RatingsMatrix& b);

/// true = observed/train, false = masked/test. Cells that were missing in
/// the source matrix are never masked, so they sit on the `true` side and
/// contribute to neither train nor test.
class ObservationMask {
 public:
  ObservationMask() = default;
  ObservationMask(std::size_t n_users, std::size_t n_items,
                  std::uint64_t seed = 0, double target_fraction = 0.0);

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::uint64_t seed() const { return seed_; }
  double target_fraction_masked() const { return target_fraction_; }

  bool train(std::size_t u, std::size_t i) const {
    return keep_[u * n_items_ + i] != 0;
  }
  void set_train(std::size_t u, std::size_t i, bool value) {
    keep_[u * n_items_ + i] = value ? 1 : 0;
  }

  std::size_t count_masked() const;
  /// Masked cells in row-major order.
  std::vector<Cell> test_cells() const;

  friend bool operator==(const ObservationMask&,
                         const ObservationMask&) = default;

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::uint64_t seed_ = 0;
  double target_fraction_ = 0.0;
  std::vector<std::uint8_t> keep_;
};

/// Orders labels: numerically when every label parses as a number, else
/// lexicographically.
std::vector<std::string> sorted_labels(std::vector<std::string> labels);

/// Pivots tidy records into a matrix. Without explicit bounds the scale is
/// the observed min/max, which must differ.
RatingsMatrix ingest_tidy(const std::vector<RatingRecord>& records,
                          std::optional<ScaleBounds> bounds = std::nullopt);

/// Flattens observed cells back into records, row-major.
std::vector<RatingRecord> to_records(const RatingsMatrix& matrix);

/// Masks exactly round(fraction * n_observed) observed cells, sampled
/// uniformly without replacement.
ObservationMask mask_random(const RatingsMatrix& matrix, double fraction,
                            std::uint64_t seed);

RatingsMatrix apply_mask(const RatingsMatrix& matrix,
                         const ObservationMask& mask);

enum class ResampleMode { kMeanDownsample, kHoldUpsample };

/// Changes the sampling rate of a time-indexed matrix.
RatingsMatrix resample(const RatingsMatrix& matrix, double source_hz,
                       double target_hz, ResampleMode mode);

/// Parses item labels as a uniform time grid at `sample_rate_hz`; returns the
/// start time. Throws NotTimeSeries when labels are not numeric or the
/// spacing is not 1 / sample_rate_hz.
double time_grid_origin(const RatingsMatrix& matrix, double sample_rate_hz);

// CSV with header user,item,rating[,group]

struct TidyTable {
  std::vector<RatingRecord> records;
  /// user label -> group label, present when the group column exists
  std::vector<std::pair<std::string, std::string>> user_groups;
  bool has_groups = false;
};

/// `group_column` names an optional extra column carried as per-user
/// metadata; empty means "group" if present.
TidyTable read_tidy_csv(std::istream& in, const std::string& group_column = "");
TidyTable read_tidy_csv_file(const std::string& path,
                             const std::string& group_column = "");

/// Shortest round-trip decimal rendering used for every numeric output.
std::string format_number(double value);

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& text);

}  // namespace ratefill
