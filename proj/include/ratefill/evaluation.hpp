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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ratefill/estimators.hpp"
#include "ratefill/ratings.hpp"
#include "ratefill/timeseries.hpp"

namespace ratefill {

// ---------------------------------------------------------------------------
// Error metrics

/// sqrt(mean over cells of (truth - pred)^2). Throws EmptyTestSet for no
/// cells and InvalidValue if truth is missing at a cell.
double rmse(const PredictionMatrix& pred, const RatingsMatrix& truth,
            std::span<const Cell> test_cells);

/// RMSE divided by the scale range. Values above 1 are possible for
/// predictions far outside the scale.
double normalized_error(double rmse_value, double scale_min, double scale_max);

struct UserError {
  std::size_t user = 0;
  double rmse = 0.0;
  double normalized_error = 0.0;
  std::size_t n_test_cells = 0;
};

struct UserLevelResult {
  std::vector<UserError> users;
  /// Users with no masked cells; they are left out of `users`.
  std::vector<std::size_t> omitted;
};

/// One error per user over that user's masked cells only.
UserLevelResult evaluate_user_level(const PredictionMatrix& pred,
                                    const RatingsMatrix& truth,
                                    const ObservationMask& mask,
                                    const ScaleBounds& scale);

// ---------------------------------------------------------------------------
// Masking cross-validation

std::vector<double> default_sparsity_levels();

struct ExperimentPlan {
  std::vector<double> sparsity_levels = default_sparsity_levels();
  int n_iterations = 10;
  std::vector<EstimatorConfig> estimators;
  std::optional<DilationKernel> dilation;
  std::uint64_t base_seed = 0;
  /// Optional per-user strata, indexed like the matrix rows. Reporting only.
  std::vector<std::string> group_labels;
  bool clip = false;
  std::size_t jobs = 1;
  std::size_t n_boot = 1000;
  double ci_level = 0.95;

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

/// Seed of the mask for one (sparsity, iteration) grid cell.
std::uint64_t mask_seed(std::uint64_t base_seed, double sparsity, int iteration);

struct ErrorRecord {
  std::string estimator;
  double sparsity = 0.0;
  int iteration = 0;
  std::size_t user = 0;
  double rmse = 0.0;
  double normalized_error = 0.0;
  std::size_t n_test_cells = 0;
};

struct CellFailure {
  std::string estimator;
  double sparsity = 0.0;
  int iteration = 0;
  std::string message;
};

struct GridCell {
  double sparsity = 0.0;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::size_t n_masked = 0;
  std::size_t n_pseudo_observed = 0;
  std::size_t n_users_omitted = 0;
};

struct SummaryRow {
  std::string estimator;
  double sparsity = 0.0;
  std::size_t n_users = 0;
  double mean_normalized_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mean_rmse = 0.0;
};

struct EvaluationReport {
  std::vector<std::string> user_labels;
  /// Empty when the plan carried no strata.
  std::vector<std::string> group_labels;
  std::vector<std::string> estimators;
  std::vector<double> sparsity_levels;
  /// Sorted by (estimator order, sparsity, iteration, user).
  std::vector<ErrorRecord> records;
  std::vector<CellFailure> failures;
  std::vector<GridCell> grid;
  std::vector<SummaryRow> summary;
};

/// Runs every (sparsity, iteration) cell: mask, optionally dilate, fit each
/// estimator on the same training view and score per user on the masked
/// cells. Estimator failures are recorded, not thrown. Deterministic for a
/// fixed base seed at any `jobs`.
EvaluationReport run_experiment(const RatingsMatrix& matrix,
                                const ExperimentPlan& plan);

// ---------------------------------------------------------------------------
// Aggregation

/// Per-user mean over iterations of normalized error for one
/// (estimator, sparsity); user index -> mean.
std::map<std::size_t, double> per_user_means(const EvaluationReport& report,
                                             const std::string& estimator,
                                             double sparsity);

/// Mean over users of the per-user means.
double grand_mean(const EvaluationReport& report, const std::string& estimator,
                  double sparsity);

/// Percentile bootstrap over users: resample with replacement, average each
/// resample, take the central `level` interval.
std::pair<double, double> bootstrap_ci(const std::vector<double>& per_user_errors,
                                       std::size_t n_boot, double level,
                                       std::uint64_t seed);

std::vector<SummaryRow> summarize(const EvaluationReport& report,
                                  std::size_t n_boot, double level,
                                  std::uint64_t seed);

struct GroupSummaryRow {
  std::string group;
  std::string estimator;
  double sparsity = 0.0;
  std::size_t n_users = 0;
  double mean_normalized_error = 0.0;
};

/// Aggregates within each group. `group_labels` maps user label -> group;
/// throws MissingLabel for a reported user without one.
std::vector<GroupSummaryRow> stratify_report(
    const EvaluationReport& report,
    const std::map<std::string, std::string>& group_labels);

// ---------------------------------------------------------------------------
// Output

void write_report_csv(const EvaluationReport& report, std::ostream& out);
void write_summary_csv(const EvaluationReport& report, std::ostream& out);

}  // namespace ratefill
