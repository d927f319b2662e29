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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratefill/estimators.hpp"
#include "ratefill/evaluation.hpp"
#include "ratefill/timeseries.hpp"

namespace ratefill {

inline constexpr const char* kVersion = "0.1.0";

/// Experiment description read from a JSON document. Key names:
///
///   input, scale_min, scale_max, estimators, sparsity_levels, iterations,
///   dilation, base_seed, output_dir, jobs, clip, group_column, n_boot,
///   ci_level
///
/// `estimators` entries are either a bare name ("mean") or an object with
/// `name` plus hyperparameters. `dilation` is "none" or
/// {shape, width_seconds, sample_rate_hz}.
struct ExperimentConfig {
  std::string input;
  std::optional<ScaleBounds> scale;
  std::vector<EstimatorConfig> estimators;
  std::vector<double> sparsity_levels = default_sparsity_levels();
  int iterations = 10;
  std::optional<DilationKernel> dilation;
  std::uint64_t base_seed = 0;
  std::string output_dir = "results";
  std::size_t jobs = 0;  // 0 = hardware concurrency
  bool clip = false;
  std::string group_column;
  std::size_t n_boot = 1000;
  double ci_level = 0.95;
};

/// Defaults: mean, knn (k=10, pearson) and nnmf_sgd with its defaults.
std::vector<EstimatorConfig> default_estimators();

/// Parses and validates. Relative `input`/`output_dir` paths resolve against
/// `base_dir`. Throws ConfigError naming the key and its line in `text`.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

/// Parses one estimator entry; `key` is used in error messages.
EstimatorConfig parse_estimator(const nlohmann::json& entry, const std::string& key = "estimator");

/// Full config with every default spelled out; parse_config accepts it.
nlohmann::json config_to_json(const ExperimentConfig& config);
nlohmann::json estimator_to_json(const EstimatorConfig& config);

ExperimentPlan make_plan(const ExperimentConfig& config, std::vector<std::string> group_labels = {});

}  // namespace ratefill
