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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prosthestim/lstm.hpp"

namespace prosthestim::neural {

/// Per-channel z-score. Channels whose spread is numerically zero get scale 1.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  /// Statistics over every column of every matrix (rows are channels).
  static Normalizer fit(const std::vector<Eigen::MatrixXd>& series);
  static Normalizer identity(Eigen::Index channels);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& normalized) const;
};

/// One recording: inputs D x N and targets O x N sampled on the same clock.
struct TrialSeries {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

/// Index of the first sample that has a full history window. The window for
/// sample t holds inputs t - 1 - (L-1) d, ..., t - 1 - d, t - 1 (d =
/// decimation), so the prediction at t never sees inputs at t itself.
inline Eigen::Index first_predictable(const NetworkConfig& c) {
  return static_cast<Eigen::Index>(c.window_length - 1) * c.decimation + 1;
}

/// Column of the k-th window sample (oldest first) for the prediction at t.
inline Eigen::Index window_column(Eigen::Index t, Eigen::Index k, const NetworkConfig& c) {
  return t - 1 - (c.window_length - 1 - k) * c.decimation;
}

/// Time-major batch of windows ending before each sample in `ends` of `inputs`
/// (already normalised).
Sequence gather_windows(const Eigen::MatrixXd& inputs, const std::vector<Eigen::Index>& ends,
                        const NetworkConfig& config);

/// Trained network plus everything needed to apply it to raw channels.
struct Model {
  Network network;
  Normalizer input_norm;
  Normalizer target_norm;
  std::vector<std::string> input_names;
  std::vector<std::string> target_names;

  const NetworkConfig& config() const { return network.config(); }

  /// Eval-mode predictions in raw target units, O x N. Columns before
  /// first_predictable() are NaN.
  Eigen::MatrixXd predict_series(const Eigen::MatrixXd& inputs) const;

  /// Prediction from one raw window, D x L, oldest column first.
  Eigen::VectorXd predict_window(const Eigen::MatrixXd& window) const;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary container: 8-byte magic "PSTLSTM1", uint32 version, uint64 header
/// length, JSON header (config, channel names, normalisation, tensor table),
/// then every tensor as little-endian float64 in column-major order.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace prosthestim::neural
