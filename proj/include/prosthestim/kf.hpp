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

#include "prosthestim/estimator.hpp"
#include "prosthestim/models.hpp"

namespace prosthestim::filters {

/// exp(A dt) for the augmented linear system with the lever arm held.
StateMatrix discrete_transition(const plant::PlantParams& plant, double r_cop);

GaussianBelief kf_predict(const GaussianBelief& belief, double r_cop, const ProcessModel& model);

/// Linear update with gain P H^T S^-1 and P - K S K^T, symmetrised.
Correction kf_update(const GaussianBelief& predicted, const sensors::SensorFrame& frame,
                     const Eigen::MatrixXd& r, const MeasurementModel& measurement);

/// Predict over one interval with lever arm `r_cop`, then update on `frame`.
Correction kf_step(const GaussianBelief& belief, const sensors::SensorFrame& frame, double r_cop,
                   const ProcessModel& model, const MeasurementModel& measurement,
                   const Eigen::MatrixXd& r);

/// Discrete Kalman filter on the exactly discretised plant.
class LinearKalmanFilter final : public Estimator {
public:
  LinearKalmanFilter(ProcessModel model, MeasurementModel measurement, sensors::NoiseSpec noise);

  std::string_view name() const override { return "KF"; }
  void reset(const GaussianBelief& initial) override;
  void predict(double r_cop) override;
  Correction update(const sensors::SensorFrame& frame) override;
  const GaussianBelief& belief() const override { return belief_; }

private:
  ProcessModel model_;
  MeasurementModel measurement_;
  sensors::NoiseSpec noise_;
  GaussianBelief belief_;
};

}  // namespace prosthestim::filters
