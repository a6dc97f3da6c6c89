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

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "prosthestim/gait.hpp"
#include "prosthestim/sensors.hpp"

namespace prosthestim::hybrid {

/// Channels the LSTM can read. Each is a function of one sensor frame and the
/// lever arm in effect at that sample.
///
///   force_plate    plate reading, 0 when absent
///   force_present  1 when the plate reading exists, else 0
///   grf            m (g + z_ddot) from the accelerometer
///   knee_angle     knee encoder, 0 when absent
///   omega          gyro rate
///   r_cop          centre-of-pressure lever arm
enum class Feature { force_plate, force_present, grf, knee_angle, omega, r_cop };

std::string_view to_string(Feature feature);
Feature parse_feature(std::string_view name);  // throws InvalidArgument
std::vector<std::string> feature_names(const std::vector<Feature>& features);
std::vector<Feature> parse_features(const std::vector<std::string>& names);

/// Target rows every model is trained on, in this order.
inline constexpr std::string_view kThetaTarget = "theta";
inline constexpr std::string_view kForceTarget = "f_z";
std::vector<std::string> target_names();

double feature_value(Feature feature, const sensors::SensorFrame& frame, double r_cop,
                     const plant::PlantParams& plant);

Eigen::VectorXd feature_vector(const std::vector<Feature>& features,
                               const sensors::SensorFrame& frame, double r_cop,
                               const plant::PlantParams& plant);

/// D x N, one column per frame.
Eigen::MatrixXd feature_matrix(const std::vector<Feature>& features,
                               const std::vector<sensors::SensorFrame>& frames,
                               const std::vector<double>& r_cop, const plant::PlantParams& plant);

/// 2 x N of true (theta, f_z).
Eigen::MatrixXd target_matrix(const plant::GroundTruthTrace& truth);

}  // namespace prosthestim::hybrid
