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

#include "prosthestim/kf.hpp"

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "prosthestim/error.hpp"

namespace prosthestim::filters {

StateMatrix discrete_transition(const plant::PlantParams& plant, double r_cop) {
  const StateMatrix a = continuous_system_matrix(plant, r_cop) * plant.dt;
  return a.exp();
}

GaussianBelief kf_predict(const GaussianBelief& belief, double r_cop, const ProcessModel& model) {
  const StateMatrix phi = discrete_transition(model.plant, r_cop);
  GaussianBelief out;
  out.mean = phi * belief.mean;
  out.cov = symmetrized(phi * belief.cov * phi.transpose() + model.q);
  check_health(out);
  return out;
}

Correction kf_update(const GaussianBelief& predicted, const sensors::SensorFrame& frame,
                     const Eigen::MatrixXd& r, const MeasurementModel& measurement) {
  const sensors::ChannelMask mask = measurement.mask(frame);
  const int m = mask.count();
  if (r.rows() != m || r.cols() != m)
    throw DimensionMismatch(fmt::format(
        "measurement covariance is {}x{} but the frame carries {} channels", r.rows(), r.cols(), m));
  const Eigen::MatrixXd h = measurement.jacobian(mask);
  const Eigen::MatrixXd s = symmetrized(h * predicted.cov * h.transpose() + r);

  const auto llt = factor_innovation(s);

  const Eigen::MatrixXd gain = llt.solve(h * predicted.cov).transpose();
  Correction c;
  c.mask = mask;
  c.innovation = measurement.observe(frame, mask) - measurement.predict(predicted.mean, mask);
  c.innovation_cov = s;
  c.belief.mean = predicted.mean + gain * c.innovation;
  c.belief.cov = symmetrized(predicted.cov - gain * s * gain.transpose());
  check_health(c.belief);
  return c;
}

Correction kf_step(const GaussianBelief& belief, const sensors::SensorFrame& frame, double r_cop,
                   const ProcessModel& model, const MeasurementModel& measurement,
                   const Eigen::MatrixXd& r) {
  return kf_update(kf_predict(belief, r_cop, model), frame, r, measurement);
}

LinearKalmanFilter::LinearKalmanFilter(ProcessModel model, MeasurementModel measurement,
                                       sensors::NoiseSpec noise)
    : model_(std::move(model)), measurement_(measurement), noise_(noise) {
  model_.validate();
  noise_.validate();
}

void LinearKalmanFilter::reset(const GaussianBelief& initial) {
  check_health(initial);
  belief_ = initial;
}

void LinearKalmanFilter::predict(double r_cop) { belief_ = kf_predict(belief_, r_cop, model_); }

Correction LinearKalmanFilter::update(const sensors::SensorFrame& frame) {
  Correction c = kf_update(belief_, frame, sensors::noise_covariance(noise_, measurement_.mask(frame)),
                           measurement_);
  belief_ = c.belief;
  return c;
}

}  // namespace prosthestim::filters
