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

#include <Eigen/Core>

#include "prosthestim/belief.hpp"
#include "prosthestim/plant.hpp"
#include "prosthestim/sensors.hpp"

namespace prosthestim::filters {

/// Shared transition model: the joint states follow the plant driven by
/// tau = r_cop * f_z, and f_z is a random walk.
struct ProcessModel {
  plant::PlantParams plant;
  StateMatrix q = StateMatrix::Zero();  // additive per-step process noise, diagonal

  static ProcessModel make(const plant::PlantParams& plant, double q_theta, double q_theta_dot,
                           double q_force);
  void validate() const;
};

/// Continuous-time system matrix of the augmented state for a fixed lever arm.
StateMatrix continuous_system_matrix(const plant::PlantParams& plant, double r_cop);

/// One RK4 step of the augmented state; f_z is held.
StateVector transition(const StateVector& x, double r_cop, const ProcessModel& model,
                       std::size_t step_index = 0);

struct LinearizedTransition {
  StateVector value;
  StateMatrix jacobian;
};

/// RK4 step together with the exact derivative of the one-step map, obtained by
/// carrying the tangent through each stage.
LinearizedTransition transition_with_jacobian(const StateVector& x, double r_cop,
                                              const ProcessModel& model,
                                              std::size_t step_index = 0);

/// Maps a state onto the sensor channels. Gyro reads theta_dot, the
/// accelerometer reads f_z / m - g, the force plate reads f_z.
struct MeasurementModel {
  double mass = 70.0;
  double gravity = 9.81;
  bool fuse_accel = true;

  static MeasurementModel from(const plant::PlantParams& plant, bool fuse_accel = true) {
    return {plant.mass, plant.gravity, fuse_accel};
  }

  sensors::ChannelMask mask(const sensors::SensorFrame& frame) const {
    return sensors::ChannelMask::of(frame, fuse_accel);
  }
  Eigen::VectorXd predict(const StateVector& x, const sensors::ChannelMask& mask) const;
  Eigen::MatrixXd jacobian(const sensors::ChannelMask& mask) const;
  Eigen::VectorXd observe(const sensors::SensorFrame& frame,
                          const sensors::ChannelMask& mask) const;
};

}  // namespace prosthestim::filters
