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

#include "ratefill/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "ratefill/error.hpp"
#include "ratefill/rng.hpp"

namespace ratefill {

double rmse(const PredictionMatrix& pred, const RatingsMatrix& truth,
            std::span<const Cell> test_cells) {
  if (test_cells.empty()) throw EmptyTestSet("no test cells to score");
  double sse = 0.0;
  for (const auto& [u, i] : test_cells) {
    if (!truth.observed(u, i)) {
      throw InvalidValue("truth is missing at test cell (" + std::to_string(u) + ", " +
                         std::to_string(i) + ")");
    }
    const double e = truth.at(u, i) - pred.at(u, i);
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(test_cells.size()));
}

double normalized_error(double rmse_value, double scale_min, double scale_max) {
  if (!(scale_max > scale_min)) {
    throw DegenerateScale("scale_max must exceed scale_min");
  }
  return rmse_value / (scale_max - scale_min);
}

UserLevelResult evaluate_user_level(const PredictionMatrix& pred,
                                    const RatingsMatrix& truth,
                                    const ObservationMask& mask,
                                    const ScaleBounds& scale) {
  if (mask.n_users() != truth.n_users() || mask.n_items() != truth.n_items() ||
      pred.n_users != truth.n_users() || pred.n_items != truth.n_items()) {
    throw ShapeError("prediction, truth and mask shapes differ");
  }
  UserLevelResult result;
  std::vector<Cell> cells;
  for (std::size_t u = 0; u < truth.n_users(); ++u) {
    cells.clear();
    for (std::size_t i = 0; i < truth.n_items(); ++i) {
      if (!mask.train(u, i) && truth.observed(u, i)) cells.push_back({u, i});
    }
    if (cells.empty()) {
      result.omitted.push_back(u);
      continue;
    }
    const double r = rmse(pred, truth, cells);
    result.users.push_back({u, r, normalized_error(r, scale.min, scale.max), cells.size()});
  }
  return result;
}

std::vector<double> default_sparsity_levels() {
  std::vector<double> levels;
  for (int k = 1; k <= 9; ++k) levels.push_back(k / 10.0);
  return levels;
}

void ExperimentPlan::validate() const {
  if (sparsity_levels.empty()) throw InvalidArgument("sparsity_levels is empty");
  for (double s : sparsity_levels) {
    if (!(s > 0.0 && s < 1.0)) {
      throw InvalidArgument("sparsity level " + format_number(s) + " is outside (0, 1)");
    }
  }
  if (n_iterations < 1) throw InvalidArgument("iterations must be at least 1");
  if (estimators.empty()) throw InvalidArgument("no estimators configured");
  std::vector<std::string> names;
  for (const auto& e : estimators) names.push_back(e.name());
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw InvalidArgument("estimator labels must be unique");
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw InvalidArgument("ci_level must lie in (0, 1)");
  if (dilation) dilation->width_samples();
}

std::uint64_t mask_seed(std::uint64_t base_seed, double sparsity, int iteration) {
  const auto sparsity_key = static_cast<std::uint64_t>(std::llround(sparsity * 1e6));
  return combine_seeds(combine_seeds(base_seed, sparsity_key),
                       static_cast<std::uint64_t>(iteration));
}

namespace {

struct CellResult {
  std::vector<ErrorRecord> records;
  std::optional<CellFailure> failure;
  GridCell grid;
};

template <class Fn>
void parallel_for(std::size_t n_tasks, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n_tasks));
  if (jobs == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t t = next++; t < n_tasks; t = next++) fn(t);
    });
  }
}

// mean relative to the first element; exact when all values are equal
double stable_mean(const std::vector<double>& values) {
  const double ref = values.front();
  double dev = 0.0;
  for (double v : values) dev += v - ref;
  return ref + dev / static_cast<double>(values.size());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

EvaluationReport run_experiment(const RatingsMatrix& matrix, const ExperimentPlan& plan) {
  plan.validate();
  if (!plan.group_labels.empty() && plan.group_labels.size() != matrix.n_users()) {
    throw InvalidArgument("group_labels must have one entry per user");
  }

  const std::size_t n_sparsity = plan.sparsity_levels.size();
  const auto n_iter = static_cast<std::size_t>(plan.n_iterations);
  const std::size_t n_est = plan.estimators.size();
  const std::size_t n_tasks = n_sparsity * n_iter * n_est;

  std::vector<CellResult> results(n_tasks);
  parallel_for(n_tasks, plan.jobs, [&](std::size_t task) {
    const std::size_t e = task % n_est;
    const std::size_t it = (task / n_est) % n_iter;
    const std::size_t s = task / (n_est * n_iter);
    const double sparsity = plan.sparsity_levels[s];
    const int iteration = static_cast<int>(it) + 1;
    const auto& estimator = plan.estimators[e];
    CellResult& out = results[task];
    out.grid.sparsity = sparsity;
    out.grid.iteration = iteration;
    out.grid.seed = mask_seed(plan.base_seed, sparsity, iteration);
    try {
      const ObservationMask mask = mask_random(matrix, sparsity, out.grid.seed);
      out.grid.n_masked = mask.count_masked();
      RatingsMatrix train = apply_mask(matrix, mask);
      if (plan.dilation) {
        DilationResult dilated = dilate(train, *plan.dilation);
        out.grid.n_pseudo_observed = dilated.count_pseudo();
        train = std::move(dilated.matrix);
      }
      PredictionMatrix pred = fit_predict(estimator, train, out.grid.seed);
      if (plan.clip) {
        pred = clip_predictions(std::move(pred), matrix.scale().min, matrix.scale().max);
      }
      const UserLevelResult scored = evaluate_user_level(pred, matrix, mask, matrix.scale());
      out.grid.n_users_omitted = scored.omitted.size();
      for (const auto& ue : scored.users) {
        out.records.push_back({estimator.name(), sparsity, iteration, ue.user, ue.rmse,
                               ue.normalized_error, ue.n_test_cells});
      }
    } catch (const std::exception& ex) {
      out.failure = CellFailure{estimator.name(), sparsity, iteration, ex.what()};
    }
  });

  EvaluationReport report;
  report.user_labels = matrix.user_labels();
  report.group_labels = plan.group_labels;
  report.sparsity_levels = plan.sparsity_levels;
  for (const auto& est : plan.estimators) report.estimators.push_back(est.name());

  // Emit in (estimator, sparsity, iteration, user) order regardless of the
  // order tasks finished in.
  for (std::size_t e = 0; e < n_est; ++e) {
    for (std::size_t s = 0; s < n_sparsity; ++s) {
      for (std::size_t it = 0; it < n_iter; ++it) {
        auto& cell = results[(s * n_iter + it) * n_est + e];
        report.records.insert(report.records.end(), cell.records.begin(), cell.records.end());
        if (cell.failure) report.failures.push_back(*cell.failure);
      }
    }
  }
  for (std::size_t s = 0; s < n_sparsity; ++s) {
    for (std::size_t it = 0; it < n_iter; ++it) {
      // grid metadata is identical across estimators; take the first success
      GridCell grid = results[(s * n_iter + it) * n_est].grid;
      for (std::size_t e = 0; e < n_est; ++e) {
        const auto& cell = results[(s * n_iter + it) * n_est + e];
        if (!cell.failure) {
          grid = cell.grid;
          break;
        }
      }
      report.grid.push_back(grid);
    }
  }
  report.summary = summarize(report, plan.n_boot, plan.ci_level, plan.base_seed);
  return report;
}

std::map<std::size_t, double> per_user_means(const EvaluationReport& report,
                                             const std::string& estimator,
                                             double sparsity) {
  std::map<std::size_t, std::vector<double>> by_user;
  for (const auto& r : report.records) {
    if (r.estimator == estimator && r.sparsity == sparsity) {
      by_user[r.user].push_back(r.normalized_error);
    }
  }
  std::map<std::size_t, double> means;
  for (const auto& [user, errors] : by_user) means[user] = stable_mean(errors);
  return means;
}

double grand_mean(const EvaluationReport& report, const std::string& estimator,
                  double sparsity) {
  const auto means = per_user_means(report, estimator, sparsity);
  if (means.empty()) return std::nan("");
  std::vector<double> values;
  for (const auto& [user, m] : means) values.push_back(m);
  return stable_mean(values);
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& per_user_errors,
                                       std::size_t n_boot, double level,
                                       std::uint64_t seed) {
  if (per_user_errors.size() < 2) {
    throw InsufficientData("bootstrap needs at least 2 users");
  }
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("level must lie in (0, 1)");
  if (n_boot < 1) throw InvalidArgument("n_boot must be at least 1");

  const std::size_t n = per_user_errors.size();
  const double ref = per_user_errors.front();
  Rng rng(seed);
  std::vector<double> means(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    double dev = 0.0;
    for (std::size_t k = 0; k < n; ++k) dev += per_user_errors[rng.below(n)] - ref;
    means[b] = ref + dev / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

std::vector<SummaryRow> summarize(const EvaluationReport& report, std::size_t n_boot,
                                  double level, std::uint64_t seed) {
  std::vector<SummaryRow> rows;
  for (std::size_t e = 0; e < report.estimators.size(); ++e) {
    for (std::size_t s = 0; s < report.sparsity_levels.size(); ++s) {
      const auto& name = report.estimators[e];
      const double sparsity = report.sparsity_levels[s];
      std::map<std::size_t, std::vector<double>> rmse_by_user;
      for (const auto& r : report.records) {
        if (r.estimator == name && r.sparsity == sparsity) rmse_by_user[r.user].push_back(r.rmse);
      }
      const auto means = per_user_means(report, name, sparsity);
      SummaryRow row;
      row.estimator = name;
      row.sparsity = sparsity;
      row.n_users = means.size();
      if (means.empty()) {
        row.mean_normalized_error = row.ci_low = row.ci_high = row.mean_rmse = std::nan("");
        rows.push_back(row);
        continue;
      }
      std::vector<double> values;
      std::vector<double> rmse_means;
      for (const auto& [user, m] : means) {
        values.push_back(m);
        rmse_means.push_back(stable_mean(rmse_by_user[user]));
      }
      row.mean_normalized_error = stable_mean(values);
      row.mean_rmse = stable_mean(rmse_means);
      if (values.size() >= 2) {
        const auto [lo, hi] = bootstrap_ci(
            values, n_boot, level, combine_seeds(seed, e * 1000003ULL + s));
        row.ci_low = lo;
        row.ci_high = hi;
      } else {
        row.ci_low = row.ci_high = row.mean_normalized_error;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<GroupSummaryRow> stratify_report(
    const EvaluationReport& report,
    const std::map<std::string, std::string>& group_labels) {
  std::vector<std::string> user_group(report.user_labels.size());
  std::vector<bool> needed(report.user_labels.size(), false);
  for (const auto& r : report.records) needed[r.user] = true;
  std::vector<std::string> groups;
  for (std::size_t u = 0; u < report.user_labels.size(); ++u) {
    auto it = group_labels.find(report.user_labels[u]);
    if (it == group_labels.end()) {
      if (needed[u]) throw MissingLabel("user '" + report.user_labels[u] + "' has no group label");
      continue;
    }
    user_group[u] = it->second;
    if (std::find(groups.begin(), groups.end(), it->second) == groups.end()) {
      groups.push_back(it->second);
    }
  }
  std::sort(groups.begin(), groups.end());

  std::vector<GroupSummaryRow> rows;
  for (const auto& group : groups) {
    for (const auto& name : report.estimators) {
      for (double sparsity : report.sparsity_levels) {
        std::vector<double> values;
        for (const auto& [user, m] : per_user_means(report, name, sparsity)) {
          if (user_group[user] == group) values.push_back(m);
        }
        GroupSummaryRow row{group, name, sparsity, values.size(), std::nan("")};
        if (!values.empty()) row.mean_normalized_error = stable_mean(values);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_report_csv(const EvaluationReport& report, std::ostream& out) {
  out << "estimator,sparsity,iteration,user,group,rmse,normalized_error,n_test_cells\n";
  for (const auto& r : report.records) {
    const std::string group = report.group_labels.empty() ? "" : report.group_labels[r.user];
    out << r.estimator << ',' << format_number(r.sparsity) << ',' << r.iteration << ','
        << csv_field(report.user_labels[r.user]) << ',' << csv_field(group) << ',' << format_number(r.rmse) << ','
        << format_number(r.normalized_error) << ',' << r.n_test_cells << '\n';
  }
}

void write_summary_csv(const EvaluationReport& report, std::ostream& out) {
  out << "estimator,sparsity,n_users,mean_normalized_error,ci_low,ci_high,mean_rmse\n";
  for (const auto& row : report.summary) {
    out << row.estimator << ',' << format_number(row.sparsity) << ',' << row.n_users << ','
        << format_number(row.mean_normalized_error) << ',' << format_number(row.ci_low) << ','
        << format_number(row.ci_high) << ',' << format_number(row.mean_rmse) << '\n';
  }
}

}  // namespace ratefill
