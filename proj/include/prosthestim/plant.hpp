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

namespace prosthestim::plant {

/// Physical constants of the single-DOF ankle.
///
/// Sign convention: positive theta is dorsiflexion; positive lever arm places
/// the centre of pressure anterior to the joint.
struct PlantParams {
  double inertia = 0.0197;  // kg m^2
  double damping = 0.5;     // N m s / rad
  double stiffness = 270.0; // N m / rad
  double mass = 70.0;       // kg
  double gravity = 9.81;    // m / s^2
  double dt = 1e-3;         // s

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;
};

struct JointState {
  double theta = 0.0;      // rad
  double theta_dot = 0.0;  // rad/s
};

struct StateRate {
  double theta_dot = 0.0;   // rad/s
  double theta_ddot = 0.0;  // rad/s^2
};

/// Joint kinematics plus the viscoelastic torque balance:
/// (theta_dot, (tau_ext - b theta_dot - k theta) / I).
StateRate state_derivative(const JointState& state, double tau_ext, const PlantParams& params);

/// One classical RK4 step of length params.dt with tau_ext held over the step.
/// Throws SimulationDiverged carrying `step_index` when |theta| leaves [0, pi].
JointState step(const JointState& state, double tau_ext, const PlantParams& params,
                std::size_t step_index = 0);

/// Vertical ground reaction force m (g + z_ddot), never negative.
double grf_from_accel(double z_ddot, const PlantParams& params);

/// Ankle torque produced by a vertical force acting at the centre of pressure.
double torque_from_grf(double r_cop, double f_z);

struct OutputVector {
  double theta = 0.0;
  double theta_dot = 0.0;
  double f_grf = 0.0;
  double tau_ext = 0.0;
};

OutputVector output_vector(const JointState& state, double z_ddot, double r_cop,
                           const PlantParams& params);

}  // namespace prosthestim::plant
