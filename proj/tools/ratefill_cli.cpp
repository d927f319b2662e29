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

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ratefill/commands.hpp"
#include "ratefill/error.hpp"

using namespace ratefill;

namespace {

struct EstimatorFlags {
  std::string name = "nnmf_sgd";
  std::size_t k = 10;
  std::string metric = "pearson";
  std::size_t min_overlap = 2;
  double gamma = 0.001;
  std::size_t factors = 0;
  double lambda = 0.0;
  double tol = 1e-6;
  int max_iters = 1000;
  std::uint64_t seed = 0;
};

EstimatorConfig to_estimator(const EstimatorFlags& f) {
  EstimatorConfig e;
  e.kind = parse_estimator_kind(f.name);
  e.knn.k = f.k;
  e.knn.metric = parse_metric(f.metric);
  e.knn.min_overlap = f.min_overlap;
  e.sgd.gamma = f.gamma;
  e.sgd.factors = f.factors;
  e.sgd.lambda_bi = e.sgd.lambda_bu = e.sgd.lambda_qi = e.sgd.lambda_pu = f.lambda;
  e.sgd.tol = f.tol;
  e.sgd.max_iters = f.max_iters;
  e.sgd.seed = f.seed;
  e.mult.factors = f.factors;
  e.mult.tol = f.tol;
  e.mult.max_iters = f.max_iters;
  e.mult.seed = f.seed;
  return e;
}

std::optional<ScaleBounds> scale_from(const std::optional<double>& lo,
                                      const std::optional<double>& hi) {
  if (lo.has_value() != hi.has_value()) {
    throw InvalidArgument("--scale-min and --scale-max must be given together");
  }
  if (!lo) return std::nullopt;
  return ScaleBounds{*lo, *hi};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ratefill: matrix completion for sparse ratings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // run
  RunOptions run;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_jobs;
  std::optional<std::string> run_output;
  auto* run_cmd = app.add_subcommand("run", "Run a masking cross-validation sweep");
  run_cmd->add_option("--config", run.config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--seed", run_seed, "Override base_seed");
  run_cmd->add_option("--jobs", run_jobs, "Worker threads (default: CPU count)");
  run_cmd->add_option("--output", run_output, "Override output_dir");
  run_cmd->add_flag("--clip", run.clip, "Clip predictions to the rating scale");

  // complete
  CompleteOptions complete;
  EstimatorFlags est;
  std::optional<double> complete_lo, complete_hi;
  std::optional<std::string> model_output;
  auto* complete_cmd =
      app.add_subcommand("complete", "Predict every missing rating of a tidy CSV");
  complete_cmd->add_option("--input", complete.input, "Tidy CSV user,item,rating")->required();
  complete_cmd->add_option("--output", complete.output, "Output CSV")->required();
  complete_cmd->add_option("--estimator", est.name, "mean | knn | nnmf_sgd | nnmf_mult")
      ->capture_default_str();
  complete_cmd->add_option("--k", est.k, "KNN neighbour count")->capture_default_str();
  complete_cmd->add_option("--metric", est.metric, "pearson | cosine | spearman | kendall")
      ->capture_default_str();
  complete_cmd->add_option("--min-overlap", est.min_overlap)->capture_default_str();
  complete_cmd->add_option("--gamma", est.gamma, "SGD learning rate")->capture_default_str();
  complete_cmd->add_option("--factors", est.factors, "0 = min(users, items)")
      ->capture_default_str();
  complete_cmd->add_option("--lambda", est.lambda, "L2 weight for all four terms")
      ->capture_default_str();
  complete_cmd->add_option("--tol", est.tol)->capture_default_str();
  complete_cmd->add_option("--max-iters", est.max_iters)->capture_default_str();
  complete_cmd->add_option("--seed", est.seed)->capture_default_str();
  complete_cmd->add_option("--scale-min", complete_lo);
  complete_cmd->add_option("--scale-max", complete_hi);
  complete_cmd->add_option("--model-output", model_output, "Save the fitted factorization (JSON)");
  complete_cmd->add_flag("--clip", complete.clip, "Clip predictions to the rating scale");

  // simulate
  std::string sim_config;
  std::string sim_output;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic clustered ratings CSV");
  sim_cmd->add_option("--config", sim_config, "Simulation spec (JSON)")->required();
  sim_cmd->add_option("--output", sim_output, "Output CSV")->required();
  std::optional<std::uint64_t> sim_seed;
  sim_cmd->add_option("--seed", sim_seed, "Override the spec seed");

  // similarity-dump
  SimilarityDumpOptions dump;
  std::string dump_metric = "pearson";
  std::optional<double> dump_lo, dump_hi;
  auto* dump_cmd = app.add_subcommand("similarity-dump", "Write the user similarity matrix");
  dump_cmd->add_option("--input", dump.input, "Tidy CSV user,item,rating")->required();
  dump_cmd->add_option("--output", dump.output, "Output CSV")->required();
  dump_cmd->add_option("--metric", dump_metric)->capture_default_str();
  dump_cmd->add_option("--min-overlap", dump.min_overlap)->capture_default_str();
  dump_cmd->add_option("--scale-min", dump_lo);
  dump_cmd->add_option("--scale-max", dump_hi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      run.seed = run_seed;
      run.jobs = run_jobs;
      run.output_dir = run_output;
      return cmd_run(run, std::cout, std::cerr);
    }
    if (*complete_cmd) {
      complete.estimator = to_estimator(est);
      complete.scale = scale_from(complete_lo, complete_hi);
      complete.model_output = model_output;
      return cmd_complete(complete, std::cout, std::cerr);
    }
    if (*sim_cmd) {
      std::ifstream in(sim_config);
      if (!in) {
        std::cerr << "cannot open '" << sim_config << "'\n";
        return kExitConfig;
      }
      std::stringstream text;
      text << in.rdbuf();
      SimulateOptions options = parse_simulation_spec(text.str());
      if (sim_seed) options.clusters.seed = options.timeseries.seed = *sim_seed;
      options.output = sim_output;
      return cmd_simulate(options, std::cout, std::cerr);
    }
    if (*dump_cmd) {
      dump.metric = parse_metric(dump_metric);
      dump.scale = scale_from(dump_lo, dump_hi);
      return cmd_similarity_dump(dump, std::cout, std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
