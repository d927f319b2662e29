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

#include "ratefill/serialization.hpp"

#include <fstream>

#include "ratefill/error.hpp"

namespace ratefill {

namespace {

using nlohmann::json;

json matrix_rows(const std::vector<double>& values, std::size_t rows,
                 std::size_t cols) {
  json out = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(values.begin() + r * cols,
                                      values.begin() + (r + 1) * cols));
  }
  return out;
}

std::vector<double> flatten_rows(const json& rows, std::size_t n_rows,
                                 std::size_t n_cols, const char* what) {
  if (!rows.is_array() || rows.size() != n_rows) {
    throw ParseError(std::string(what) + " has the wrong number of rows");
  }
  std::vector<double> out;
  out.reserve(n_rows * n_cols);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != n_cols) {
      throw ParseError(std::string(what) + " has a row of the wrong length");
    }
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

std::string init_name(FactorInit init) {
  return init == FactorInit::kZeros ? "zeros" : "half_normal";
}
std::string scaling_name(InitScaling s) {
  return s == InitScaling::kBySqrtFactors ? "sqrt_factors" : "factors";
}
std::string clamp_name(ClampMode c) {
  return c == ClampMode::kPerIteration ? "per_iteration" : "per_update";
}

}  // namespace

json model_to_json(const NnmfModel& model) {
  json doc;
  const bool sgd = model.variant == NnmfVariant::kSgd;
  doc["variant"] = sgd ? "nnmf_sgd" : "nnmf_mult";
  doc["n_users"] = model.n_users;
  doc["n_items"] = model.n_items;
  doc["factors"] = model.factors;
  doc["mu"] = model.mu;
  doc["shift"] = model.shift;
  doc["user_bias"] = model.user_bias;
  doc["item_bias"] = model.item_bias;
  doc["user_factors"] = matrix_rows(model.user_factors, model.n_users, model.factors);
  doc["item_factors"] = matrix_rows(model.item_factors, model.factors, model.n_items);
  json hp;
  if (sgd) {
    hp["gamma"] = model.sgd.gamma;
    hp["lambda_bi"] = model.sgd.lambda_bi;
    hp["lambda_bu"] = model.sgd.lambda_bu;
    hp["lambda_qi"] = model.sgd.lambda_qi;
    hp["lambda_pu"] = model.sgd.lambda_pu;
    hp["tol"] = model.sgd.tol;
    hp["max_iters"] = model.sgd.max_iters;
    hp["init"] = init_name(model.sgd.init);
    hp["init_scaling"] = scaling_name(model.sgd.init_scaling);
    hp["clamp"] = clamp_name(model.sgd.clamp);
    doc["seed"] = model.sgd.seed;
  } else {
    hp["tol"] = model.mult.tol;
    hp["max_iters"] = model.mult.max_iters;
    doc["seed"] = model.mult.seed;
  }
  doc["hyperparameters"] = hp;
  doc["convergence"] = {{"iterations_run", model.iterations_run},
                        {"final_rmse", model.final_rmse},
                        {"converged", model.converged}};
  return doc;
}

NnmfModel model_from_json(const json& doc) {
  try {
    NnmfModel model;
    const std::string variant = doc.at("variant").get<std::string>();
    if (variant != "nnmf_sgd" && variant != "nnmf_mult") {
      throw ParseError("unknown model variant '" + variant + "'");
    }
    model.variant = variant == "nnmf_sgd" ? NnmfVariant::kSgd : NnmfVariant::kMultiplicative;
    model.n_users = doc.at("n_users").get<std::size_t>();
    model.n_items = doc.at("n_items").get<std::size_t>();
    model.factors = doc.at("factors").get<std::size_t>();
    model.mu = doc.at("mu").get<double>();
    model.shift = doc.value("shift", 0.0);
    model.user_bias = doc.at("user_bias").get<std::vector<double>>();
    model.item_bias = doc.at("item_bias").get<std::vector<double>>();
    if (model.user_bias.size() != model.n_users || model.item_bias.size() != model.n_items) {
      throw ParseError("bias vector length does not match the model shape");
    }
    model.user_factors =
        flatten_rows(doc.at("user_factors"), model.n_users, model.factors, "user_factors");
    model.item_factors =
        flatten_rows(doc.at("item_factors"), model.factors, model.n_items, "item_factors");
    const auto& hp = doc.at("hyperparameters");
    if (model.variant == NnmfVariant::kSgd) {
      model.sgd.factors = model.factors;
      model.sgd.gamma = hp.at("gamma").get<double>();
      model.sgd.lambda_bi = hp.at("lambda_bi").get<double>();
      model.sgd.lambda_bu = hp.at("lambda_bu").get<double>();
      model.sgd.lambda_qi = hp.at("lambda_qi").get<double>();
      model.sgd.lambda_pu = hp.at("lambda_pu").get<double>();
      model.sgd.tol = hp.at("tol").get<double>();
      model.sgd.max_iters = hp.at("max_iters").get<int>();
      model.sgd.init = hp.value("init", "half_normal") == "zeros" ? FactorInit::kZeros
                                                                  : FactorInit::kHalfNormal;
      model.sgd.init_scaling = hp.value("init_scaling", "factors") == "sqrt_factors"
                                   ? InitScaling::kBySqrtFactors
                                   : InitScaling::kByFactors;
      model.sgd.clamp = hp.value("clamp", "per_update") == "per_iteration"
                            ? ClampMode::kPerIteration
                            : ClampMode::kPerUpdate;
      model.sgd.seed = doc.at("seed").get<std::uint64_t>();
    } else {
      model.mult.factors = model.factors;
      model.mult.tol = hp.at("tol").get<double>();
      model.mult.max_iters = hp.at("max_iters").get<int>();
      model.mult.seed = doc.at("seed").get<std::uint64_t>();
    }
    const auto& conv = doc.at("convergence");
    model.iterations_run = conv.at("iterations_run").get<int>();
    model.final_rmse = conv.at("final_rmse").get<double>();
    model.converged = conv.value("converged", false);
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const NnmfModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << model_to_json(model).dump(2) << '\n';
}

NnmfModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return model_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
}

}  // namespace ratefill
