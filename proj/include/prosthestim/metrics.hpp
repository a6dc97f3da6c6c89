// Copyright 2026 The prosthestim Authors.
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
#include <span>
#include <vector>

namespace prosthestim::eval {

/// Points per normalised gait cycle, both ends included.
inline constexpr std::size_t kCyclePoints = 1001;

/// sqrt(mean((measured - predicted)^2)). Throws DimensionMismatch on unequal
/// lengths and InvalidArgument on empty input.
double rmse(std::span<const double> measured, std::span<const double> predicted);

/// 100 rmse / (max(measured) - min(measured)). Throws InvalidArgument when the
/// measured series is flat, since the normalisation is then undefined.
double rmse_percent(std::span<const double> measured, std::span<const double> predicted);

/// 1 - SS_res / SS_tot. May be negative. Throws InvalidArgument when the
/// measured series has zero variance.
double r_squared(std::span<const double> measured, std::span<const double> predicted);

/// Linear interpolation of each cycle onto kCyclePoints uniform phase points.
/// Cycle k runs from sample boundaries[k] to boundaries[k + 1], both
/// inclusive, so its first and last values are kept exactly. Throws
/// InvalidArgument naming the cycle when one spans fewer than 2 samples or
/// leaves the series.
std::vector<double> resample_cycle(std::span<const double> series,
                                   std::span<const std::size_t> boundaries);

/// Boundaries for resample_cycle from cycle start indices: every start, plus
/// the last sample when the final cycle is complete. Incomplete trailing
/// cycles are dropped.
std::vector<std::size_t> cycle_boundaries(std::span<const std::size_t> cycle_starts,
                                          std::size_t n_samples, std::size_t samples_per_cycle);

/// Median and interquartile range with linear interpolation between order
/// statistics. NaN for an empty set.
double median(std::vector<double> values);
double iqr(std::vector<double> values);

}  // namespace prosthestim::eval
