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
#include <string_view>
#include <vector>

#include "ratefill/ratings.hpp"

namespace ratefill {

enum class KernelShape { kBoxcar, kGaussian };

std::string_view to_string(KernelShape shape);
KernelShape parse_kernel_shape(std::string_view name);

/// Boxcar width is the full window. A gaussian is truncated to the same
/// window with sigma = window / 4.
struct DilationKernel {
  KernelShape shape = KernelShape::kBoxcar;
  double width_seconds = 1.0;
  double sample_rate_hz = 1.0;

  /// round(width_seconds * sample_rate_hz); throws InvalidArgument if < 1.
  std::size_t width_samples() const;
  std::size_t half_width() const { return width_samples() / 2; }
  double weight(std::size_t distance) const;
};

struct DilationResult {
  RatingsMatrix matrix;
  /// Row-major; 1 where the value was observed before dilation.
  std::vector<std::uint8_t> original;

  bool is_original(std::size_t u, std::size_t i) const {
    return original[u * matrix.n_items() + i] != 0;
  }
  bool is_pseudo(std::size_t u, std::size_t i) const {
    return matrix.observed(u, i) && !is_original(u, i);
  }
  std::size_t count_pseudo() const;
};

/// Spreads every observed rating to the missing timepoints within
/// +-floor(width/2) samples of it, row by row. Missing points covered by
/// several observations take their kernel-weighted mean; observed values are
/// never changed. Must run on the already-masked training view.
DilationResult dilate(const RatingsMatrix& train, const DilationKernel& kernel);

}  // namespace ratefill
