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

#include "prosthestim/ekf.hpp"

#include "prosthestim/error.hpp"
#include "prosthestim/kf.hpp"

namespace prosthestim::filters {

GaussianBelief ekf_predict(const GaussianBelief& belief, double r_cop, const ProcessModel& model,
                           std::size_t step_index) {
  const auto lin = transition_with_jacobian(belief.mean, r_cop, model, step_index);
  GaussianBelief out;
  out.mean = lin.value;
  out.cov = symmetrized(lin.jacobian * belief.cov * lin.jacobian.transpose() + model.q);
  check_health(out);
  return out;
}

Correction ekf_update(const GaussianBelief& predicted, const sensors::SensorFrame& frame,
                      const Eigen::MatrixXd& r, const MeasurementModel& measurement) {
  // h is affine in the state, so linearising about the predicted mean is exact
  // and the update coincides with the linear one.
  return kf_update(predicted, frame, r, measurement);
}

Correction ekf_step(const GaussianBelief& belief, const sensors::SensorFrame& frame, double r_cop,
                    const ProcessModel& model, const MeasurementModel& measurement,
                    const Eigen::MatrixXd& r) {
  return ekf_update(ekf_predict(belief, r_cop, model), frame, r, measurement);
}

ExtendedKalmanFilter::ExtendedKalmanFilter(ProcessModel model, MeasurementModel measurement,
                                           sensors::NoiseSpec noise)
    : model_(std::move(model)), measurement_(measurement), noise_(noise) {
  model_.validate();
  noise_.validate();
}

void ExtendedKalmanFilter::reset(const GaussianBelief& initial) {
  check_health(initial);
  belief_ = initial;
  steps_ = 0;
}

void ExtendedKalmanFilter::predict(double r_cop) {
  belief_ = ekf_predict(belief_, r_cop, model_, ++steps_);
}

Correction ExtendedKalmanFilter::update(const sensors::SensorFrame& frame) {
  Correction c = ekf_update(belief_, frame,
                            sensors::noise_covariance(noise_, measurement_.mask(frame)), measurement_);
  belief_ = c.belief;
  return c;
}

}  // namespace prosthestim::filters
