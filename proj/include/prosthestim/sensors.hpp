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
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "prosthestim/gait.hpp"

namespace prosthestim::sensors {

/// Standard deviations of the additive zero-mean Gaussian sensor noise.
struct NoiseSpec {
  double sigma_gyro = 0.02;    // rad/s
  double sigma_accel = 0.2;    // m/s^2
  double sigma_force = 10.0;   // N
  double sigma_knee = 0.0175;  // rad
  std::uint64_t seed = 0;

  void validate() const;
};

/// One sample of the observation stream. Force and knee angle may be absent.
struct SensorFrame {
  double t = 0.0;
  double omega = 0.0;        // rad/s
  double z_ddot_meas = 0.0;  // m/s^2
  std::optional<double> f_z_meas;
  std::optional<double> knee_angle_meas;
};

/// Union of half-open phase intervals [begin, end) on the unit circle.
/// An interval with begin > end wraps through phase 0.
class PhaseIntervalSet {
public:
  PhaseIntervalSet() = default;
  explicit PhaseIntervalSet(std::vector<std::pair<double, double>> intervals);

  static PhaseIntervalSet whole_cycle();
  /// `count` disjoint intervals of total length `fraction`, placed from `seed`.
  static PhaseIntervalSet random(double fraction, std::size_t count, std::uint64_t seed);

  bool contains(double phase) const;
  bool empty() const noexcept { return intervals_.empty(); }
  double measure() const;
  const std::vector<std::pair<double, double>>& intervals() const noexcept { return intervals_; }

private:
  std::vector<std::pair<double, double>> intervals_;
};

/// Adds per-channel noise to the truth. Gyro, accelerometer, force and knee
/// channels draw from independent substreams of `noise.seed`. Force inside
/// `force_dropout` is reported absent; otherwise it is clamped at zero.
std::vector<SensorFrame> corrupt_trace(const plant::GroundTruthTrace& truth,
                                       const NoiseSpec& noise,
                                       const PhaseIntervalSet& force_dropout = {});

/// Which measurement channels a frame carries, in filter order gyro, accel, force.
struct ChannelMask {
  bool gyro = true;
  bool accel = true;
  bool force = true;

  static ChannelMask of(const SensorFrame& frame, bool fuse_accel = true) {
    return {true, fuse_accel, frame.f_z_meas.has_value()};
  }
  int count() const { return int(gyro) + int(accel) + int(force); }
};

/// Diagonal R over the present channels, in the order gyro, accel, force.
Eigen::MatrixXd noise_covariance(const NoiseSpec& noise, const ChannelMask& mask);

/// Columns t,omega,z_ddot,f_z,knee_angle with NA for absent values.
void write_frames_csv(const std::vector<SensorFrame>& frames, const std::filesystem::path& path);
std::vector<SensorFrame> read_frames_csv(const std::filesystem::path& path);

}  // namespace prosthestim::sensors
