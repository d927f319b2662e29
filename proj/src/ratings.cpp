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

#include "ratefill/ratings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ratefill/error.hpp"
#include "ratefill/rng.hpp"

namespace ratefill {

namespace {

std::optional<double> parse_number(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return value;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

void check_unique(const std::vector<std::string>& labels, const char* what) {
  std::set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second) {
      throw InvalidValue(std::string("duplicate ") + what + " label '" +
                         label + "'");
    }
  }
}

}  // namespace

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

RatingsMatrix::RatingsMatrix(std::vector<std::string> user_labels,
                             std::vector<std::string> item_labels,
                             ScaleBounds scale)
    : user_labels_(std::move(user_labels)),
      item_labels_(std::move(item_labels)),
      scale_(scale),
      values_(user_labels_.size() * item_labels_.size(), kMissing) {
  if (!(scale_.min < scale_.max)) {
    throw OutOfScale("scale_min (" + format_number(scale_.min) +
                     ") must be below scale_max (" + format_number(scale_.max) +
                     ")");
  }
  check_unique(user_labels_, "user");
  check_unique(item_labels_, "item");
}

std::optional<double> RatingsMatrix::get(std::size_t u, std::size_t i) const {
  if (!observed(u, i)) return std::nullopt;
  return at(u, i);
}

void RatingsMatrix::set(std::size_t u, std::size_t i, double value) {
  if (!std::isfinite(value)) {
    throw InvalidValue("non-finite rating for user '" + user_labels_[u] +
                       "', item '" + item_labels_[i] + "'");
  }
  values_[u * n_items() + i] = value;
}

std::size_t RatingsMatrix::count_observed() const {
  return static_cast<std::size_t>(std::count_if(
      values_.begin(), values_.end(), [](double v) { return !std::isnan(v); }));
}

std::vector<Cell> RatingsMatrix::observed_cells() const {
  std::vector<Cell> cells;
  cells.reserve(values_.size());
  for (std::size_t u = 0; u < n_users(); ++u) {
    for (std::size_t i = 0; i < n_items(); ++i) {
      if (observed(u, i)) cells.push_back({u, i});
    }
  }
  return cells;
}

bool operator==(const RatingsMatrix& a, const RatingsMatrix& b) {
  if (a.user_labels_ != b.user_labels_ || a.item_labels_ != b.item_labels_ ||
      a.scale_.min != b.scale_.min || a.scale_.max != b.scale_.max) {
    return false;
  }
  for (std::size_t k = 0; k < a.values_.size(); ++k) {
    const double x = a.values_[k];
    const double y = b.values_[k];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && std::memcmp(&x, &y, sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

ObservationMask::ObservationMask(std::size_t n_users, std::size_t n_items,
                                 std::uint64_t seed, double target_fraction)
    : n_users_(n_users),
      n_items_(n_items),
      seed_(seed),
      target_fraction_(target_fraction),
      keep_(n_users * n_items, 1) {}

std::size_t ObservationMask::count_masked() const {
  return static_cast<std::size_t>(std::count(keep_.begin(), keep_.end(), 0));
}

std::vector<Cell> ObservationMask::test_cells() const {
  std::vector<Cell> cells;
  for (std::size_t u = 0; u < n_users_; ++u) {
    for (std::size_t i = 0; i < n_items_; ++i) {
      if (!train(u, i)) cells.push_back({u, i});
    }
  }
  return cells;
}

std::vector<std::string> sorted_labels(std::vector<std::string> labels) {
  std::vector<std::pair<double, std::string>> numeric;
  numeric.reserve(labels.size());
  for (const auto& label : labels) {
    auto value = parse_number(label);
    if (!value || !std::isfinite(*value)) {
      std::stable_sort(labels.begin(), labels.end());
      return labels;
    }
    numeric.emplace_back(*value, label);
  }
  // ties in value ("1" vs "1.0") fall back to text order
  std::stable_sort(numeric.begin(), numeric.end());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    labels[k] = std::move(numeric[k].second);
  }
  return labels;
}

RatingsMatrix ingest_tidy(const std::vector<RatingRecord>& records,
                          std::optional<ScaleBounds> bounds) {
  if (records.empty()) throw InvalidValue("no rating records to ingest");

  std::set<std::string> users;
  std::set<std::string> items;
  double lo = records.front().rating;
  double hi = records.front().rating;
  for (const auto& r : records) {
    if (!std::isfinite(r.rating)) {
      throw InvalidValue("non-finite rating for user '" + r.user +
                         "', item '" + r.item + "'");
    }
    users.insert(r.user);
    items.insert(r.item);
    lo = std::min(lo, r.rating);
    hi = std::max(hi, r.rating);
  }

  ScaleBounds scale{lo, hi};
  if (bounds) {
    if (!(bounds->min < bounds->max)) {
      throw OutOfScale("scale_min must be below scale_max");
    }
    scale = *bounds;
    if (lo < scale.min || hi > scale.max) {
      throw OutOfScale("rating " + format_number(lo < scale.min ? lo : hi) +
                       " outside scale [" + format_number(scale.min) + ", " +
                       format_number(scale.max) + "]");
    }
  } else if (!(lo < hi)) {
    throw OutOfScale(
        "observed ratings span a single value; explicit scale bounds are "
        "required");
  }

  auto user_labels = sorted_labels({users.begin(), users.end()});
  auto item_labels = sorted_labels({items.begin(), items.end()});
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, std::size_t> item_index;
  for (std::size_t k = 0; k < user_labels.size(); ++k) {
    user_index[user_labels[k]] = k;
  }
  for (std::size_t k = 0; k < item_labels.size(); ++k) {
    item_index[item_labels[k]] = k;
  }

  RatingsMatrix matrix(std::move(user_labels), std::move(item_labels), scale);
  for (const auto& r : records) {
    const std::size_t u = user_index.at(r.user);
    const std::size_t i = item_index.at(r.item);
    if (matrix.observed(u, i)) {
      throw DuplicateRating("duplicate rating for user '" + r.user +
                            "', item '" + r.item + "'");
    }
    matrix.set(u, i, r.rating);
  }
  return matrix;
}

std::vector<RatingRecord> to_records(const RatingsMatrix& matrix) {
  std::vector<RatingRecord> records;
  records.reserve(matrix.count_observed());
  for (const auto& [u, i] : matrix.observed_cells()) {
    records.push_back(
        {matrix.user_labels()[u], matrix.item_labels()[i], matrix.at(u, i)});
  }
  return records;
}

ObservationMask mask_random(const RatingsMatrix& matrix, double fraction,
                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidFraction("fraction masked must lie in (0, 1), got " +
                          format_number(fraction));
  }
  std::vector<Cell> eligible = matrix.observed_cells();
  const auto n_masked = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(eligible.size())));

  // partial Fisher-Yates: the first n_masked slots become the sample
  Rng rng(seed);
  for (std::size_t k = 0; k < n_masked; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(eligible.size() - k));
    std::swap(eligible[k], eligible[j]);
  }

  ObservationMask mask(matrix.n_users(), matrix.n_items(), seed, fraction);
  for (std::size_t k = 0; k < n_masked; ++k) {
    mask.set_train(eligible[k].user, eligible[k].item, false);
  }
  return mask;
}

RatingsMatrix apply_mask(const RatingsMatrix& matrix,
                         const ObservationMask& mask) {
  if (mask.n_users() != matrix.n_users() ||
      mask.n_items() != matrix.n_items()) {
    throw ShapeError("mask is " + std::to_string(mask.n_users()) + "x" +
                     std::to_string(mask.n_items()) + ", matrix is " +
                     std::to_string(matrix.n_users()) + "x" +
                     std::to_string(matrix.n_items()));
  }
  RatingsMatrix out = matrix;
  for (std::size_t u = 0; u < matrix.n_users(); ++u) {
    for (std::size_t i = 0; i < matrix.n_items(); ++i) {
      if (!mask.train(u, i)) out.erase(u, i);
    }
  }
  return out;
}

double time_grid_origin(const RatingsMatrix& matrix, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) {
    throw InvalidArgument("sample rate must be positive");
  }
  const auto& labels = matrix.item_labels();
  std::vector<double> times;
  times.reserve(labels.size());
  for (const auto& label : labels) {
    auto t = parse_number(label);
    if (!t || !std::isfinite(*t)) {
      throw NotTimeSeries("item label '" + label + "' is not a time offset");
    }
    times.push_back(*t);
  }
  if (times.empty()) throw NotTimeSeries("matrix has no items");
  const double step = 1.0 / sample_rate_hz;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double expected = times.front() + static_cast<double>(k) * step;
    if (std::abs(times[k] - expected) > 1e-6 * std::max(1.0, step)) {
      throw NotTimeSeries("item '" + labels[k] +
                          "' breaks the uniform time grid at " +
                          format_number(sample_rate_hz) + " Hz");
    }
  }
  return times.front();
}

RatingsMatrix resample(const RatingsMatrix& matrix, double source_hz,
                       double target_hz, ResampleMode mode) {
  if (!(source_hz > 0.0) || !(target_hz > 0.0)) {
    throw InvalidArgument("sample rates must be positive");
  }
  const double origin = time_grid_origin(matrix, source_hz);
  const std::size_t n_src = matrix.n_items();
  const double ratio = target_hz / source_hz;
  // Map positions through the ratio with a small tolerance so that exact
  // rational rates (e.g. 3 -> 1 Hz) do not lose a sample to rounding.
  const auto to_target = [&](std::size_t s) {
    return static_cast<std::size_t>(
        std::floor(static_cast<double>(s) * ratio + 1e-9));
  };
  const auto n_out = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n_src) * ratio - 1e-9));

  std::vector<std::string> labels(n_out);
  for (std::size_t t = 0; t < n_out; ++t) {
    labels[t] = format_number(origin + static_cast<double>(t) / target_hz);
  }
  RatingsMatrix out(matrix.user_labels(), std::move(labels), matrix.scale());

  for (std::size_t u = 0; u < matrix.n_users(); ++u) {
    if (mode == ResampleMode::kMeanDownsample) {
      std::vector<double> sum(n_out, 0.0);
      std::vector<std::size_t> count(n_out, 0);
      for (std::size_t s = 0; s < n_src; ++s) {
        if (!matrix.observed(u, s)) continue;
        const std::size_t t = std::min(to_target(s), n_out - 1);
        sum[t] += matrix.at(u, s);
        ++count[t];
      }
      for (std::size_t t = 0; t < n_out; ++t) {
        if (count[t] > 0) out.set(u, t, sum[t] / static_cast<double>(count[t]));
      }
    } else {
      for (std::size_t t = 0; t < n_out; ++t) {
        const auto s = std::min(
            static_cast<std::size_t>(
                std::floor(static_cast<double>(t) / ratio + 1e-9)),
            n_src - 1);
        if (matrix.observed(u, s)) out.set(u, t, matrix.at(u, s));
      }
    }
  }
  return out;
}

TidyTable read_tidy_csv(std::istream& in, const std::string& group_column) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 &&
        line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("CSV input is empty");

  const auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto user_col = column("user");
  const auto item_col = column("item");
  const auto rating_col = column("rating");
  if (!user_col || !item_col || !rating_col) {
    throw ParseError("CSV header must contain user,item,rating");
  }
  const std::string group_name = group_column.empty() ? "group" : group_column;
  const auto group_col = column(group_name);
  if (!group_column.empty() && !group_col) {
    throw ParseError("CSV header has no group column '" + group_column + "'");
  }

  TidyTable table;
  table.has_groups = group_col.has_value();
  std::map<std::string, std::string> groups;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    const auto rating = parse_number(fields[*rating_col]);
    if (!rating) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": rating is not a number: '" + fields[*rating_col] +
                       "'");
    }
    table.records.push_back({fields[*user_col], fields[*item_col], *rating});
    if (group_col) {
      const auto& user = fields[*user_col];
      const auto& group = fields[*group_col];
      auto [it, inserted] = groups.emplace(user, group);
      if (!inserted && it->second != group) {
        throw ParseError("line " + std::to_string(line_no) + ": user '" +
                         user + "' has conflicting groups");
      }
    }
  }
  table.user_groups.assign(groups.begin(), groups.end());
  return table;
}

TidyTable read_tidy_csv_file(const std::string& path,
                             const std::string& group_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_tidy_csv(in, group_column);
}

}  // namespace ratefill
