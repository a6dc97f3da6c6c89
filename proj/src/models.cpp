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

#include "prosthestim/models.hpp"

#include <cmath>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::filters {

ProcessModel ProcessModel::make(const plant::PlantParams& plant, double q_theta,
                                double q_theta_dot, double q_force) {
  ProcessModel m;
  m.plant = plant;
  m.q.diagonal() << q_theta, q_theta_dot, q_force;
  m.validate();
  return m;
}

void ProcessModel::validate() const {
  plant.validate();
  for (int i = 0; i < kStateDim; ++i)
    if (!std::isfinite(q(i, i)) || q(i, i) < 0)
      throw InvalidArgument(fmt::format("process noise Q({0},{0}) must be >= 0, got {1}", i, q(i, i)));
}

StateMatrix continuous_system_matrix(const plant::PlantParams& p, double r_cop) {
  StateMatrix a;
  a << 0.0, 1.0, 0.0,
       -p.stiffness / p.inertia, -p.damping / p.inertia, r_cop / p.inertia,
       0.0, 0.0, 0.0;
  return a;
}

StateVector transition(const StateVector& x, double r_cop, const ProcessModel& model,
                       std::size_t step_index) {
  const plant::JointState next =
      plant::step({x(kTheta), x(kThetaDot)}, r_cop * x(kForce), model.plant, step_index);
  return {next.theta, next.theta_dot, x(kForce)};
}

LinearizedTransition transition_with_jacobian(const StateVector& x, double r_cop,
                                              const ProcessModel& model,
                                              std::size_t step_index) {
  // d/dx of the vector field; constant because the torque balance is linear
  // in the augmented state.
  const StateMatrix df = continuous_system_matrix(model.plant, r_cop);
  const double h = model.plant.dt;
  const StateMatrix eye = StateMatrix::Identity();
  const StateMatrix dk1 = df;
  const StateMatrix dk2 = df * (eye + 0.5 * h * dk1);
  const StateMatrix dk3 = df * (eye + 0.5 * h * dk2);
  const StateMatrix dk4 = df * (eye + h * dk3);
  return {transition(x, r_cop, model, step_index),
          eye + h / 6.0 * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4)};
}

Eigen::VectorXd MeasurementModel::predict(const StateVector& x,
                                          const sensors::ChannelMask& mask) const {
  Eigen::VectorXd y(mask.count());
  int k = 0;
  if (mask.gyro) y(k++) = x(kThetaDot);
  if (mask.accel) y(k++) = x(kForce) / mass - gravity;
  if (mask.force) y(k++) = x(kForce);
  return y;
}

Eigen::MatrixXd MeasurementModel::jacobian(const sensors::ChannelMask& mask) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(mask.count(), kStateDim);
  int k = 0;
  if (mask.gyro) h(k++, kThetaDot) = 1.0;
  if (mask.accel) h(k++, kForce) = 1.0 / mass;
  if (mask.force) h(k++, kForce) = 1.0;
  return h;
}

Eigen::VectorXd MeasurementModel::observe(const sensors::SensorFrame& frame,
                                          const sensors::ChannelMask& mask) const {
  if (mask.force && !frame.f_z_meas)
    throw DimensionMismatch("force channel requested but the frame has no force reading");
  Eigen::VectorXd y(mask.count());
  int k = 0;
  if (mask.gyro) y(k++) = frame.omega;
  if (mask.accel) y(k++) = frame.z_ddot_meas;
  if (mask.force) y(k++) = *frame.f_z_meas;
  return y;
}

}  // namespace prosthestim::filters
