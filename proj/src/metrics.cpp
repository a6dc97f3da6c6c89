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

#include "prosthestim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::eval {

namespace {

void check_pair(std::span<const double> measured, std::span<const double> predicted) {
  if (measured.size() != predicted.size())
    throw DimensionMismatch(fmt::format("measured has {} samples, predicted {}", measured.size(),
                                        predicted.size()));
  if (measured.empty()) throw InvalidArgument("metric of an empty series");
}

double quantile(std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double rmse(std::span<const double> measured, std::span<const double> predicted) {
  check_pair(measured, predicted);
  double sum = 0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double e = measured[i] - predicted[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(measured.size()));
}

double rmse_percent(std::span<const double> measured, std::span<const double> predicted) {
  check_pair(measured, predicted);
  const auto [lo, hi] = std::minmax_element(measured.begin(), measured.end());
  const double range = *hi - *lo;
  if (!(range > 0))
    throw InvalidArgument("rmse_percent: measured series is flat, range normalisation undefined");
  return 100.0 * rmse(measured, predicted) / range;
}

double r_squared(std::span<const double> measured, std::span<const double> predicted) {
  check_pair(measured, predicted);
  double mean = 0;
  for (double m : measured) mean += m;
  mean /= static_cast<double>(measured.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    ss_res += (measured[i] - predicted[i]) * (measured[i] - predicted[i]);
    ss_tot += (measured[i] - mean) * (measured[i] - mean);
  }
  if (!(ss_tot > 0)) throw InvalidArgument("r_squared: measured series has zero variance");
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> resample_cycle(std::span<const double> series,
                                   std::span<const std::size_t> boundaries) {
  if (boundaries.size() < 2) throw InvalidArgument("resample_cycle needs at least one cycle");
  std::vector<double> out;
  out.reserve((boundaries.size() - 1) * kCyclePoints);
  for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
    const std::size_t a = boundaries[k];
    const std::size_t b = boundaries[k + 1];
    if (b <= a || b >= series.size())
      throw InvalidArgument(
          fmt::format("cycle {} spans samples [{}, {}] of {}, needs at least 2", k, a, b,
                      series.size()));
    const double span = static_cast<double>(b - a);
    for (std::size_t j = 0; j < kCyclePoints; ++j) {
      if (j + 1 == kCyclePoints) {
        out.push_back(series[b]);
        continue;
      }
      const double pos = span * static_cast<double>(j) / static_cast<double>(kCyclePoints - 1);
      const auto i = static_cast<std::size_t>(std::floor(pos));
      const double w = pos - static_cast<double>(i);
      out.push_back(w == 0 ? series[a + i] : (1 - w) * series[a + i] + w * series[a + i + 1]);
    }
  }
  return out;
}

std::vector<std::size_t> cycle_boundaries(std::span<const std::size_t> cycle_starts,
                                          std::size_t n_samples, std::size_t samples_per_cycle) {
  std::vector<std::size_t> out(cycle_starts.begin(), cycle_starts.end());
  while (!out.empty() && out.back() >= n_samples) out.pop_back();
  if (out.empty()) return out;
  if (out.back() + samples_per_cycle <= n_samples) out.push_back(n_samples - 1);
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  return quantile(values, 0.5);
}

double iqr(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  return quantile(values, 0.75) - quantile(values, 0.25);
}

}  // namespace prosthestim::eval
