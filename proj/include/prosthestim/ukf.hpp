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

#include "prosthestim/estimator.hpp"
#include "prosthestim/models.hpp"

namespace prosthestim::filters {

/// Scaled unscented transform parameters.
struct UkfParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;

  double lambda(int n) const { return alpha * alpha * (n + kappa) - n; }
  /// Throws InvalidArgument unless alpha in (0, 1], beta, kappa >= 0 and n + lambda > 0.
  void validate(int n) const;
};

/// 2n + 1 points stored column-wise with mean and covariance weights.
struct SigmaPoints {
  Eigen::MatrixXd points;
  Eigen::VectorXd wm;
  Eigen::VectorXd wc;
};

/// chi_0 = mean, chi_i = mean + S_i, chi_{i+n} = mean - S_i where S is the
/// lower Cholesky factor of (n + lambda) P. The jitter of robust_cholesky is
/// applied to P itself, before scaling.
SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         const UkfParams& params);

/// Weighted mean and covariance of column-wise samples. Sums are taken
/// relative to column 0 so large offsets do not cancel catastrophically.
void unscented_moments(const Eigen::MatrixXd& samples, const SigmaPoints& sigma,
                       Eigen::VectorXd& mean, Eigen::MatrixXd& cov);

/// Propagates the sigma points through the RK4 transition and adds model.q.
GaussianBelief ukf_predict(const GaussianBelief& belief, double r_cop, const ProcessModel& model,
                           const UkfParams& params, std::size_t step_index = 0);

/// Measurement update over the channels present in `frame`. `r` must match
/// that channel count. Throws DimensionMismatch or SingularInnovation.
Correction ukf_update(const GaussianBelief& predicted, const sensors::SensorFrame& frame,
                      const Eigen::MatrixXd& r, const MeasurementModel& measurement,
                      const UkfParams& params);

class UnscentedKalmanFilter final : public Estimator {
public:
  UnscentedKalmanFilter(ProcessModel model, MeasurementModel measurement,
                        sensors::NoiseSpec noise, UkfParams params = {});

  std::string_view name() const override { return "UKF"; }
  void reset(const GaussianBelief& initial) override;
  void predict(double r_cop) override;
  Correction update(const sensors::SensorFrame& frame) override;
  const GaussianBelief& belief() const override { return belief_; }

private:
  ProcessModel model_;
  MeasurementModel measurement_;
  sensors::NoiseSpec noise_;
  UkfParams params_;
  GaussianBelief belief_;
  std::size_t steps_ = 0;
};

}  // namespace prosthestim::filters
