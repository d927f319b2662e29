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

#include <string>

#include <json.hpp>

#include "ratefill/estimators.hpp"

namespace ratefill {

/// JSON document with mu, biases, row-major factor matrices, hyperparameters,
/// seed and convergence metadata.
nlohmann::json model_to_json(const NnmfModel& model);
NnmfModel model_from_json(const nlohmann::json& doc);

void save_model(const NnmfModel& model, const std::string& path);
NnmfModel load_model(const std::string& path);

}  // namespace ratefill
