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

#include <stdexcept>
#include <string>
#include <utility>

namespace ratefill {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

#define RATEFILL_DEFINE_ERROR(Name)                               \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& message) : Error(message) {} \
  }

// ratings
RATEFILL_DEFINE_ERROR(DuplicateRating);
RATEFILL_DEFINE_ERROR(OutOfScale);
RATEFILL_DEFINE_ERROR(InvalidValue);
RATEFILL_DEFINE_ERROR(InvalidFraction);
RATEFILL_DEFINE_ERROR(ShapeError);
RATEFILL_DEFINE_ERROR(NotTimeSeries);
RATEFILL_DEFINE_ERROR(ParseError);

// estimators
RATEFILL_DEFINE_ERROR(EmptyTrainingSet);
RATEFILL_DEFINE_ERROR(InvalidArgument);

// timeseries
RATEFILL_DEFINE_ERROR(NotUniformGrid);

// evaluation
RATEFILL_DEFINE_ERROR(EmptyTestSet);
RATEFILL_DEFINE_ERROR(DegenerateScale);
RATEFILL_DEFINE_ERROR(InsufficientData);
RATEFILL_DEFINE_ERROR(MissingLabel);

// configuration; carries the offending key and, when known, its line
class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message)
      : Error(message), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

#undef RATEFILL_DEFINE_ERROR

/// SGD or multiplicative training produced a non-finite loss.
class DivergedError : public Error {
 public:
  DivergedError(int iteration, double loss)
      : Error("training diverged at iteration " + std::to_string(iteration) +
              " (loss " + std::to_string(loss) + ")"),
        iteration_(iteration),
        loss_(loss) {}
  int iteration() const { return iteration_; }
  double loss() const { return loss_; }

 private:
  int iteration_;
  double loss_;
};

}  // namespace ratefill
