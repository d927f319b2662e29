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
#include <optional>
#include <string>
#include <vector>

#include "ratefill/config.hpp"
#include "ratefill/estimators.hpp"
#include "ratefill/evaluation.hpp"
#include "ratefill/synthetic.hpp"

namespace ratefill {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitConfig = 2 };

// Each cmd_* writes diagnostics to `err` and returns an ExitCode.

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> output_dir;
  bool clip = false;
};

/// Reads the input named by `config`, runs the sweep and returns the report
/// along with the plan it used. Shared by cmd_run and in-process tests.
struct ExperimentRun {
  RatingsMatrix matrix;
  ExperimentPlan plan;
  EvaluationReport report;
};
ExperimentRun execute_config(const ExperimentConfig& config);

/// Writes report.csv, summary.csv and manifest.json into config.output_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentRun& run);

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct CompletedCell {
  std::string user;
  std::string item;
  double prediction = 0.0;
  bool clipped = false;
};

/// Fits on every observed rating and predicts each missing cell, row-major.
std::vector<CompletedCell> complete_missing(const RatingsMatrix& matrix,
                                            const EstimatorConfig& estimator, bool clip);

struct CompleteOptions {
  std::string input;
  std::string output;
  EstimatorConfig estimator;
  std::optional<ScaleBounds> scale;
  bool clip = false;
  std::optional<std::string> model_output;
};

int cmd_complete(const CompleteOptions& options, std::ostream& out, std::ostream& err);

enum class SimulationKind { kClusters, kTimeSeries };

struct SimulateOptions {
  SimulationKind kind = SimulationKind::kClusters;
  ClusterSpec clusters;
  TimeSeriesSpec timeseries;
  std::string output;
};

/// Reads a simulation spec from JSON ({"kind": "clusters" | "timeseries",
/// ...spec fields}). Throws ConfigError.
SimulateOptions parse_simulation_spec(const std::string& text);

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);

struct SimilarityDumpOptions {
  std::string input;
  std::string output;
  SimilarityMetric metric = SimilarityMetric::kPearson;
  std::size_t min_overlap = 2;
  std::optional<ScaleBounds> scale;
};

int cmd_similarity_dump(const SimilarityDumpOptions& options, std::ostream& out,
                        std::ostream& err);

}  // namespace ratefill
