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

#include "ratefill/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ratefill/error.hpp"

namespace ratefill {

std::string_view to_string(KernelShape shape) {
  return shape == KernelShape::kGaussian ? "gaussian" : "boxcar";
}

KernelShape parse_kernel_shape(std::string_view name) {
  if (name == "boxcar") return KernelShape::kBoxcar;
  if (name == "gaussian") return KernelShape::kGaussian;
  throw InvalidArgument("unknown kernel shape '" + std::string(name) +
                        "' (expected boxcar or gaussian)");
}

std::size_t DilationKernel::width_samples() const {
  if (!(width_seconds >= 1.0)) throw InvalidArgument("kernel width must be at least 1 s");
  if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
  const double samples = std::round(width_seconds * sample_rate_hz);
  if (samples < 1.0) throw InvalidArgument("kernel is narrower than one sample");
  return static_cast<std::size_t>(samples);
}

double DilationKernel::weight(std::size_t distance) const {
  if (shape == KernelShape::kBoxcar) return 1.0;
  const double sigma = static_cast<double>(width_samples()) / 4.0;
  const double d = static_cast<double>(distance);
  return std::exp(-0.5 * d * d / (sigma * sigma));
}

std::size_t DilationResult::count_pseudo() const {
  std::size_t n = 0;
  for (std::size_t u = 0; u < matrix.n_users(); ++u) {
    for (std::size_t i = 0; i < matrix.n_items(); ++i) n += is_pseudo(u, i) ? 1 : 0;
  }
  return n;
}

DilationResult dilate(const RatingsMatrix& train, const DilationKernel& kernel) {
  try {
    time_grid_origin(train, kernel.sample_rate_hz);
  } catch (const NotTimeSeries& e) {
    throw NotUniformGrid(e.what());
  }
  const std::size_t half = kernel.half_width();
  const std::size_t n_items = train.n_items();

  std::vector<double> weights(half + 1);
  for (std::size_t d = 0; d <= half; ++d) weights[d] = kernel.weight(d);

  DilationResult result{train, std::vector<std::uint8_t>(train.size(), 0)};
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    for (std::size_t t = 0; t < n_items; ++t) {
      if (train.observed(u, t)) {
        result.original[u * n_items + t] = 1;
        continue;
      }
      const std::size_t lo = t >= half ? t - half : 0;
      const std::size_t hi = std::min(n_items - 1, t + half);
      double weighted = 0.0;
      double total = 0.0;
      double first = 0.0;
      bool uniform = true;
      for (std::size_t s = lo; s <= hi; ++s) {
        if (!train.observed(u, s)) continue;
        const double value = train.at(u, s);
        if (total == 0.0) first = value;
        uniform = uniform && value == first;
        const double w = weights[s > t ? s - t : t - s];
        weighted += w * value;
        total += w;
      }
      // a single distinct source value is copied exactly, not re-averaged
      if (total > 0.0) result.matrix.set(u, t, uniform ? first : weighted / total);
    }
  }
  return result;
}

}  // namespace ratefill
