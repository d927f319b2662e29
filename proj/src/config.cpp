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

#include "ratefill/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "ratefill/error.hpp"

namespace ratefill {

namespace {

using nlohmann::json;

// Line of the first `"key"` occurrence in the source text, 0 if not found.
int line_of(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  int line = 1;
  for (std::size_t k = 0; k < pos; ++k) line += text[k] == '\n' ? 1 : 0;
  return line;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    // the leaf of a dotted/indexed key is what appears in the text
    std::string leaf = key;
    if (auto dot = leaf.find_last_of('.'); dot != std::string::npos) leaf = leaf.substr(dot + 1);
    if (auto bracket = leaf.find('['); bracket != std::string::npos) leaf = leaf.substr(0, bracket);
    const int line = line_of(text_, leaf);
    std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
    throw ConfigError(key, line, where + key + ": " + message);
  }

  double number(const json& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  std::int64_t integer(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }
  std::size_t count(const json& v, const std::string& key, std::size_t min) const {
    const auto n = integer(v, key);
    if (n < static_cast<std::int64_t>(min)) {
      fail(key, "must be at least " + std::to_string(min));
    }
    return static_cast<std::size_t>(n);
  }
  std::uint64_t seed(const json& v, const std::string& key) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const auto n = integer(v, key);
    if (n < 0) fail(key, "must be non-negative");
    return static_cast<std::uint64_t>(n);
  }
  std::string string(const json& v, const std::string& key) const {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const json& v, const std::string& key) const {
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }
  void known_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& prefix) const {
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) fail(prefix.empty() ? k : prefix + "." + k, "unknown key");
    }
  }

 private:
  const std::string& text_;
};

EstimatorConfig read_estimator(const Reader& r, const json& entry, const std::string& key) {
  EstimatorConfig est;
  if (entry.is_string()) {
    try {
      est.kind = parse_estimator_kind(entry.get<std::string>());
    } catch (const InvalidArgument& e) {
      r.fail(key, e.what());
    }
    return est;
  }
  if (!entry.is_object()) r.fail(key, "expected an estimator name or object");
  if (!entry.contains("name")) r.fail(key + ".name", "missing estimator name");
  try {
    est.kind = parse_estimator_kind(r.string(entry["name"], key + ".name"));
  } catch (const InvalidArgument& e) {
    r.fail(key + ".name", e.what());
  }
  if (entry.contains("label")) est.label = r.string(entry["label"], key + ".label");

  const auto sub = [&](const char* k) { return key + "." + k; };
  switch (est.kind) {
    case EstimatorKind::kMean:
      r.known_keys(entry, {"name", "label"}, key);
      break;
    case EstimatorKind::kKnn:
      r.known_keys(entry, {"name", "label", "k", "metric", "min_overlap"}, key);
      if (entry.contains("k")) est.knn.k = r.count(entry["k"], sub("k"), 1);
      if (entry.contains("metric")) {
        try {
          est.knn.metric = parse_metric(r.string(entry["metric"], sub("metric")));
        } catch (const InvalidArgument& e) {
          r.fail(sub("metric"), e.what());
        }
      }
      if (entry.contains("min_overlap")) {
        est.knn.min_overlap = r.count(entry["min_overlap"], sub("min_overlap"), 1);
      }
      if (est.knn.metric != SimilarityMetric::kCosine && est.knn.min_overlap < 2) {
        r.fail(sub("min_overlap"), "correlation metrics need min_overlap >= 2");
      }
      break;
    case EstimatorKind::kNnmfSgd: {
      r.known_keys(entry,
                   {"name", "label", "gamma", "factors", "lambda", "lambda_bi", "lambda_bu",
                    "lambda_qi", "lambda_pu", "tol", "max_iters", "seed", "init", "init_scaling",
                    "clamp"},
                   key);
      auto& c = est.sgd;
      if (entry.contains("gamma")) c.gamma = r.number(entry["gamma"], sub("gamma"));
      if (!(c.gamma > 0.0)) r.fail(sub("gamma"), "must be positive");
      if (entry.contains("factors")) c.factors = r.count(entry["factors"], sub("factors"), 0);
      if (entry.contains("lambda")) {
        const double l = r.number(entry["lambda"], sub("lambda"));
        c.lambda_bi = c.lambda_bu = c.lambda_qi = c.lambda_pu = l;
      }
      if (entry.contains("lambda_bi")) c.lambda_bi = r.number(entry["lambda_bi"], sub("lambda_bi"));
      if (entry.contains("lambda_bu")) c.lambda_bu = r.number(entry["lambda_bu"], sub("lambda_bu"));
      if (entry.contains("lambda_qi")) c.lambda_qi = r.number(entry["lambda_qi"], sub("lambda_qi"));
      if (entry.contains("lambda_pu")) c.lambda_pu = r.number(entry["lambda_pu"], sub("lambda_pu"));
      for (auto [name, value] : std::initializer_list<std::pair<const char*, double>>{{"lambda_bi", c.lambda_bi}, {"lambda_bu", c.lambda_bu},
                                 {"lambda_qi", c.lambda_qi}, {"lambda_pu", c.lambda_pu}}) {
        if (value < 0.0) r.fail(sub(name), "must be non-negative");
      }
      if (entry.contains("tol")) c.tol = r.number(entry["tol"], sub("tol"));
      if (c.tol < 0.0) r.fail(sub("tol"), "must be non-negative");
      if (entry.contains("max_iters")) {
        c.max_iters = static_cast<int>(r.count(entry["max_iters"], sub("max_iters"), 1));
      }
      if (entry.contains("seed")) c.seed = r.seed(entry["seed"], sub("seed"));
      if (entry.contains("init")) {
        const auto v = r.string(entry["init"], sub("init"));
        if (v != "half_normal" && v != "zeros") r.fail(sub("init"), "expected half_normal or zeros");
        c.init = v == "zeros" ? FactorInit::kZeros : FactorInit::kHalfNormal;
      }
      if (entry.contains("init_scaling")) {
        const auto v = r.string(entry["init_scaling"], sub("init_scaling"));
        if (v != "factors" && v != "sqrt_factors") {
          r.fail(sub("init_scaling"), "expected factors or sqrt_factors");
        }
        c.init_scaling = v == "sqrt_factors" ? InitScaling::kBySqrtFactors : InitScaling::kByFactors;
      }
      if (entry.contains("clamp")) {
        const auto v = r.string(entry["clamp"], sub("clamp"));
        if (v != "per_update" && v != "per_iteration") {
          r.fail(sub("clamp"), "expected per_update or per_iteration");
        }
        c.clamp = v == "per_iteration" ? ClampMode::kPerIteration : ClampMode::kPerUpdate;
      }
      break;
    }
    case EstimatorKind::kNnmfMult: {
      r.known_keys(entry, {"name", "label", "factors", "tol", "max_iters", "seed"}, key);
      auto& c = est.mult;
      if (entry.contains("factors")) c.factors = r.count(entry["factors"], sub("factors"), 0);
      if (entry.contains("tol")) c.tol = r.number(entry["tol"], sub("tol"));
      if (c.tol < 0.0) r.fail(sub("tol"), "must be non-negative");
      if (entry.contains("max_iters")) {
        c.max_iters = static_cast<int>(r.count(entry["max_iters"], sub("max_iters"), 1));
      }
      if (entry.contains("seed")) c.seed = r.seed(entry["seed"], sub("seed"));
      break;
    }
  }
  return est;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  const std::filesystem::path base = base_dir.empty() ? "." : base_dir;
  return std::filesystem::absolute(base / p).lexically_normal().string();
}

}  // namespace

std::vector<EstimatorConfig> default_estimators() {
  std::vector<EstimatorConfig> out(3);
  out[0].kind = EstimatorKind::kMean;
  out[1].kind = EstimatorKind::kKnn;
  out[2].kind = EstimatorKind::kNnmfSgd;
  return out;
}

EstimatorConfig parse_estimator(const json& entry, const std::string& key) {
  const std::string text = entry.dump();
  return read_estimator(Reader(text), entry, key);
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it to a line
    int line = 1;
    for (std::size_t k = 0; k < std::min(e.byte, text.size()); ++k) line += text[k] == '\n';
    throw ConfigError("", line, "line " + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  const Reader r(text);
  if (!doc.is_object()) r.fail("<root>", "config must be a JSON object");
  r.known_keys(doc,
               {"input", "scale_min", "scale_max", "estimators", "sparsity_levels", "iterations",
                "dilation", "base_seed", "output_dir", "jobs", "clip", "group_column", "n_boot",
                "ci_level"},
               "");

  ExperimentConfig cfg;
  if (!doc.contains("input")) r.fail("input", "missing required key");
  cfg.input = resolve(r.string(doc["input"], "input"), base_dir);
  if (!std::filesystem::exists(cfg.input)) r.fail("input", "file '" + cfg.input + "' does not exist");

  if (doc.contains("scale_min") != doc.contains("scale_max")) {
    r.fail(doc.contains("scale_min") ? "scale_max" : "scale_min",
           "scale_min and scale_max must be given together");
  }
  if (doc.contains("scale_min")) {
    ScaleBounds s{r.number(doc["scale_min"], "scale_min"), r.number(doc["scale_max"], "scale_max")};
    if (!(s.min < s.max)) r.fail("scale_max", "must exceed scale_min");
    cfg.scale = s;
  }

  if (doc.contains("estimators")) {
    const auto& list = doc["estimators"];
    if (!list.is_array() || list.empty()) r.fail("estimators", "expected a non-empty list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      cfg.estimators.push_back(read_estimator(r, list[k], "estimators[" + std::to_string(k) + "]"));
    }
    std::set<std::string> labels;
    for (const auto& e : cfg.estimators) {
      if (!labels.insert(e.name()).second) {
        r.fail("estimators", "duplicate estimator label '" + e.name() + "'; set distinct labels");
      }
    }
  } else {
    cfg.estimators = default_estimators();
  }

  if (doc.contains("sparsity_levels")) {
    const auto& list = doc["sparsity_levels"];
    if (!list.is_array() || list.empty()) r.fail("sparsity_levels", "expected a non-empty list");
    cfg.sparsity_levels.clear();
    for (const auto& v : list) {
      const double s = r.number(v, "sparsity_levels");
      if (!(s > 0.0 && s < 1.0)) {
        r.fail("sparsity_levels", "value " + format_number(s) + " is outside (0, 1)");
      }
      cfg.sparsity_levels.push_back(s);
    }
  }
  if (doc.contains("iterations")) {
    cfg.iterations = static_cast<int>(r.count(doc["iterations"], "iterations", 1));
  }

  if (doc.contains("dilation")) {
    const auto& d = doc["dilation"];
    if (d.is_string()) {
      if (d.get<std::string>() != "none") r.fail("dilation", "expected \"none\" or a kernel object");
    } else if (d.is_object()) {
      r.known_keys(d, {"shape", "width_seconds", "sample_rate_hz"}, "dilation");
      DilationKernel kernel;
      if (d.contains("shape")) {
        try {
          kernel.shape = parse_kernel_shape(r.string(d["shape"], "dilation.shape"));
        } catch (const InvalidArgument& e) {
          r.fail("dilation.shape", e.what());
        }
      }
      if (!d.contains("width_seconds")) r.fail("dilation.width_seconds", "missing kernel width");
      kernel.width_seconds = r.number(d["width_seconds"], "dilation.width_seconds");
      if (!(kernel.width_seconds >= 1.0)) r.fail("dilation.width_seconds", "must be at least 1");
      if (d.contains("sample_rate_hz")) {
        kernel.sample_rate_hz = r.number(d["sample_rate_hz"], "dilation.sample_rate_hz");
        if (!(kernel.sample_rate_hz > 0.0)) r.fail("dilation.sample_rate_hz", "must be positive");
      }
      if (std::round(kernel.width_seconds * kernel.sample_rate_hz) < 1.0) {
        r.fail("dilation.width_seconds", "kernel is narrower than one sample");
      }
      cfg.dilation = kernel;
    } else if (!d.is_null()) {
      r.fail("dilation", "expected \"none\" or a kernel object");
    }
  }

  if (doc.contains("base_seed")) cfg.base_seed = r.seed(doc["base_seed"], "base_seed");
  if (doc.contains("output_dir")) cfg.output_dir = r.string(doc["output_dir"], "output_dir");
  cfg.output_dir = resolve(cfg.output_dir, base_dir);
  if (doc.contains("jobs")) cfg.jobs = r.count(doc["jobs"], "jobs", 0);
  if (doc.contains("clip")) cfg.clip = r.boolean(doc["clip"], "clip");
  if (doc.contains("group_column")) cfg.group_column = r.string(doc["group_column"], "group_column");
  if (doc.contains("n_boot")) cfg.n_boot = r.count(doc["n_boot"], "n_boot", 1);
  if (doc.contains("ci_level")) {
    cfg.ci_level = r.number(doc["ci_level"], "ci_level");
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) r.fail("ci_level", "must lie in (0, 1)");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(buffer.str(), dir.empty() ? "." : dir);
}

json estimator_to_json(const EstimatorConfig& e) {
  json j;
  j["name"] = std::string(to_string(e.kind));
  if (!e.label.empty()) j["label"] = e.label;
  switch (e.kind) {
    case EstimatorKind::kMean:
      break;
    case EstimatorKind::kKnn:
      j["k"] = e.knn.k;
      j["metric"] = std::string(to_string(e.knn.metric));
      j["min_overlap"] = e.knn.min_overlap;
      break;
    case EstimatorKind::kNnmfSgd:
      j["gamma"] = e.sgd.gamma;
      j["factors"] = e.sgd.factors;
      j["lambda_bi"] = e.sgd.lambda_bi;
      j["lambda_bu"] = e.sgd.lambda_bu;
      j["lambda_qi"] = e.sgd.lambda_qi;
      j["lambda_pu"] = e.sgd.lambda_pu;
      j["tol"] = e.sgd.tol;
      j["max_iters"] = e.sgd.max_iters;
      j["seed"] = e.sgd.seed;
      j["init"] = e.sgd.init == FactorInit::kZeros ? "zeros" : "half_normal";
      j["init_scaling"] =
          e.sgd.init_scaling == InitScaling::kBySqrtFactors ? "sqrt_factors" : "factors";
      j["clamp"] = e.sgd.clamp == ClampMode::kPerIteration ? "per_iteration" : "per_update";
      break;
    case EstimatorKind::kNnmfMult:
      j["factors"] = e.mult.factors;
      j["tol"] = e.mult.tol;
      j["max_iters"] = e.mult.max_iters;
      j["seed"] = e.mult.seed;
      break;
  }
  return j;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["input"] = cfg.input;
  if (cfg.scale) {
    j["scale_min"] = cfg.scale->min;
    j["scale_max"] = cfg.scale->max;
  }
  j["estimators"] = json::array();
  for (const auto& e : cfg.estimators) j["estimators"].push_back(estimator_to_json(e));
  j["sparsity_levels"] = cfg.sparsity_levels;
  j["iterations"] = cfg.iterations;
  if (cfg.dilation) {
    j["dilation"] = {{"shape", std::string(to_string(cfg.dilation->shape))},
                     {"width_seconds", cfg.dilation->width_seconds},
                     {"sample_rate_hz", cfg.dilation->sample_rate_hz}};
  } else {
    j["dilation"] = "none";
  }
  j["base_seed"] = cfg.base_seed;
  j["output_dir"] = cfg.output_dir;
  j["jobs"] = cfg.jobs;
  j["clip"] = cfg.clip;
  j["group_column"] = cfg.group_column;
  j["n_boot"] = cfg.n_boot;
  j["ci_level"] = cfg.ci_level;
  return j;
}

ExperimentPlan make_plan(const ExperimentConfig& cfg, std::vector<std::string> group_labels) {
  ExperimentPlan plan;
  plan.sparsity_levels = cfg.sparsity_levels;
  plan.n_iterations = cfg.iterations;
  plan.estimators = cfg.estimators;
  plan.dilation = cfg.dilation;
  plan.base_seed = cfg.base_seed;
  plan.group_labels = std::move(group_labels);
  plan.clip = cfg.clip;
  plan.jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
  plan.n_boot = cfg.n_boot;
  plan.ci_level = cfg.ci_level;
  return plan;
}

}  // namespace ratefill
