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

#include "ratefill/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <ostream>
#include <sstream>

#include "ratefill/error.hpp"
#include "ratefill/serialization.hpp"

namespace ratefill {

namespace {

using nlohmann::json;

std::ofstream open_output(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

struct LoadedInput {
  RatingsMatrix matrix;
  std::vector<std::string> group_labels;
};

LoadedInput load_input(const std::string& path, const std::optional<ScaleBounds>& scale,
                       const std::string& group_column) {
  TidyTable table = read_tidy_csv_file(path, group_column);
  LoadedInput loaded{ingest_tidy(table.records, scale), {}};
  if (table.has_groups) {
    std::map<std::string, std::string> groups(table.user_groups.begin(), table.user_groups.end());
    for (const auto& user : loaded.matrix.user_labels()) loaded.group_labels.push_back(groups[user]);
  }
  return loaded;
}

}  // namespace

ExperimentRun execute_config(const ExperimentConfig& config) {
  LoadedInput loaded = load_input(config.input, config.scale, config.group_column);
  ExperimentPlan plan = make_plan(config, loaded.group_labels);
  EvaluationReport report = run_experiment(loaded.matrix, plan);
  return {std::move(loaded.matrix), std::move(plan), std::move(report)};
}

void write_outputs(const ExperimentConfig& config, const ExperimentRun& run) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = open_output((dir / "report.csv").string());
    write_report_csv(run.report, out);
  }
  {
    auto out = open_output((dir / "summary.csv").string());
    write_summary_csv(run.report, out);
  }
  json manifest;
  manifest["software"] = {{"name", "ratefill"}, {"version", kVersion}};
  manifest["config"] = config_to_json(config);
  manifest["data"] = {{"n_users", run.matrix.n_users()},
                      {"n_items", run.matrix.n_items()},
                      {"n_observed", run.matrix.count_observed()},
                      {"scale_min", run.matrix.scale().min},
                      {"scale_max", run.matrix.scale().max}};
  manifest["seeds"] = {
      {"mask_seed", "combine(combine(base_seed, round(sparsity * 1e6)), iteration)"},
      {"model_seed", "combine(estimator seed, mask seed)"}};
  json grid = json::array();
  for (const auto& cell : run.report.grid) {
    grid.push_back({{"sparsity", cell.sparsity},
                    {"iteration", cell.iteration},
                    {"mask_seed", cell.seed},
                    {"n_masked", cell.n_masked},
                    {"n_pseudo_observed", cell.n_pseudo_observed},
                    {"n_users_omitted", cell.n_users_omitted}});
  }
  manifest["grid"] = grid;
  json failures = json::array();
  for (const auto& f : run.report.failures) {
    failures.push_back({{"estimator", f.estimator},
                        {"sparsity", f.sparsity},
                        {"iteration", f.iteration},
                        {"message", f.message}});
  }
  manifest["failures"] = failures;
  auto out = open_output((dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(options.config_path);
    if (options.seed) config.base_seed = *options.seed;
    if (options.jobs) config.jobs = *options.jobs;
    if (options.output_dir) config.output_dir = std::filesystem::absolute(*options.output_dir).string();
    if (options.clip) config.clip = true;
  } catch (const ConfigError& e) {
    err << options.config_path << ": " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const ExperimentRun run = execute_config(config);
    write_outputs(config, run);
    out << "wrote " << run.report.records.size() << " records to " << config.output_dir << '\n';
    if (!run.report.failures.empty()) {
      for (const auto& f : run.report.failures) {
        err << "estimator " << f.estimator << ", sparsity " << format_number(f.sparsity)
            << ", iteration " << f.iteration << ": " << f.message << '\n';
      }
      return kExitRuntime;
    }
    return kExitOk;
  } catch (const ParseError& e) {
    err << "input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

std::vector<CompletedCell> complete_missing(const RatingsMatrix& matrix,
                                            const EstimatorConfig& estimator, bool clip) {
  const PredictionMatrix pred = fit_predict(estimator, matrix);
  std::vector<CompletedCell> cells;
  for (std::size_t u = 0; u < matrix.n_users(); ++u) {
    for (std::size_t i = 0; i < matrix.n_items(); ++i) {
      if (matrix.observed(u, i)) continue;
      double value = pred.at(u, i);
      bool clipped = false;
      if (clip) {
        const double bounded = std::clamp(value, matrix.scale().min, matrix.scale().max);
        clipped = bounded != value;
        value = bounded;
      }
      cells.push_back({matrix.user_labels()[u], matrix.item_labels()[i], value, clipped});
    }
  }
  return cells;
}

int cmd_complete(const CompleteOptions& options, std::ostream& out, std::ostream& err) {
  LoadedInput loaded;
  try {
    loaded = load_input(options.input, options.scale, "");
  } catch (const std::exception& e) {
    err << options.input << ": " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const auto& matrix = loaded.matrix;
    if (matrix.count_observed() == matrix.size()) {
      err << "warning: input has no missing ratings; nothing to complete\n";
    }
    const auto cells = complete_missing(matrix, options.estimator, options.clip);
    auto file = open_output(options.output);
    file << "user,item,prediction,clipped\n";
    for (const auto& c : cells) {
      file << csv_field(c.user) << ',' << csv_field(c.item) << ',' << format_number(c.prediction)
           << ',' << (c.clipped ? 1 : 0) << '\n';
    }
    if (options.model_output) {
      const auto kind = options.estimator.kind;
      if (kind == EstimatorKind::kNnmfSgd) {
        save_model(fit_nnmf_sgd(matrix, options.estimator.sgd), *options.model_output);
      } else if (kind == EstimatorKind::kNnmfMult) {
        save_model(fit_nnmf_mult(matrix, options.estimator.mult), *options.model_output);
      } else {
        err << "warning: --model-output only applies to factorization estimators\n";
      }
    }
    out << "completed " << cells.size() << " missing ratings\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

SimulateOptions parse_simulation_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", 0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("<root>", 0, "simulation spec must be a JSON object");
  SimulateOptions opts;
  const std::string kind = doc.value("kind", "clusters");
  if (kind != "clusters" && kind != "timeseries") {
    throw ConfigError("kind", 0, "kind: expected clusters or timeseries");
  }
  opts.kind = kind == "clusters" ? SimulationKind::kClusters : SimulationKind::kTimeSeries;

  const auto get_count = [&](const char* key, std::size_t& target) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number_integer() || doc[key].get<std::int64_t>() < 0) {
      throw ConfigError(key, 0, std::string(key) + ": expected a non-negative integer");
    }
    target = doc[key].get<std::size_t>();
  };
  const auto get_number = [&](const char* key, double& target) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number()) throw ConfigError(key, 0, std::string(key) + ": expected a number");
    target = doc[key].get<double>();
  };
  const auto get_seed = [&](std::uint64_t& target) {
    if (!doc.contains("seed")) return;
    if (!doc["seed"].is_number_integer() || doc["seed"].get<std::int64_t>() < 0) {
      throw ConfigError("seed", 0, "seed: expected a non-negative integer");
    }
    target = doc["seed"].get<std::uint64_t>();
  };

  std::set<std::string> allowed{"kind", "n_groups", "users_per_group", "noise_sd", "seed",
                                "scale_min", "scale_max"};
  if (opts.kind == SimulationKind::kClusters) {
    allowed.insert("n_items");
    auto& s = opts.clusters;
    get_count("n_groups", s.n_groups);
    get_count("users_per_group", s.users_per_group);
    get_count("n_items", s.n_items);
    get_number("noise_sd", s.noise_sd);
    get_number("scale_min", s.scale_min);
    get_number("scale_max", s.scale_max);
    get_seed(s.seed);
  } else {
    allowed.insert({"n_timepoints", "period_seconds", "sample_rate_hz", "amplitude"});
    auto& s = opts.timeseries;
    get_count("n_groups", s.n_groups);
    get_count("users_per_group", s.users_per_group);
    get_count("n_timepoints", s.n_timepoints);
    get_number("period_seconds", s.period_seconds);
    get_number("sample_rate_hz", s.sample_rate_hz);
    get_number("amplitude", s.amplitude);
    get_number("noise_sd", s.noise_sd);
    get_number("scale_min", s.scale_min);
    get_number("scale_max", s.scale_max);
    get_seed(s.seed);
  }
  for (const auto& [k, v] : doc.items()) {
    if (!allowed.count(k)) throw ConfigError(k, 0, k + ": unknown key");
  }
  return opts;
}

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  SyntheticData data;
  try {
    data = options.kind == SimulationKind::kClusters ? simulate_clusters(options.clusters)
                                                     : simulate_timeseries(options.timeseries);
  } catch (const InvalidArgument& e) {
    err << "invalid simulation spec: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    auto file = open_output(options.output);
    write_tidy_csv(data, file);
    out << "wrote " << data.matrix.count_observed() << " ratings for " << data.matrix.n_users()
        << " users to " << options.output << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_similarity_dump(const SimilarityDumpOptions& options, std::ostream& out,
                        std::ostream& err) {
  LoadedInput loaded;
  try {
    loaded = load_input(options.input, options.scale, "");
  } catch (const std::exception& e) {
    err << options.input << ": " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const auto sim = compute_similarity(loaded.matrix, options.metric, options.min_overlap);
    const auto& users = loaded.matrix.user_labels();
    auto file = open_output(options.output);
    file << "user";
    for (const auto& u : users) file << ',' << csv_field(u);
    file << '\n';
    for (std::size_t u = 0; u < users.size(); ++u) {
      file << csv_field(users[u]);
      for (std::size_t v = 0; v < users.size(); ++v) {
        file << ',';
        if (sim.defined(u, v)) file << format_number(sim.raw(u, v));
      }
      file << '\n';
    }
    out << "wrote " << users.size() << "x" << users.size() << " " << to_string(options.metric)
        << " similarity matrix to " << options.output << '\n';
    return kExitOk;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace ratefill
