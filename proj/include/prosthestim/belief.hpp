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

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace prosthestim::filters {

/// Augmented filter state [theta, theta_dot, f_z] in (rad, rad/s, N).
using StateVector = Eigen::Vector3d;
using StateMatrix = Eigen::Matrix3d;

enum StateIndex : int { kTheta = 0, kThetaDot = 1, kForce = 2 };
inline constexpr int kStateDim = 3;

struct GaussianBelief {
  StateVector mean = StateVector::Zero();
  StateMatrix cov = StateMatrix::Identity();
};

/// Jitter added to the diagonal before every Cholesky factorisation.
inline constexpr double kCholeskyJitter = 1e-12;

/// (P + P^T) / 2.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& p);

/// Lower Cholesky factor of sym(P). When that fails, sym(P) + jitter I is
/// factored instead, then once more with a larger scale-aware jitter before
/// giving up with CovarianceNotPsd.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& p);

/// LLT of an innovation covariance; throws SingularInnovation with the
/// condition number when it is not safely invertible.
Eigen::LLT<Eigen::MatrixXd> factor_innovation(const Eigen::MatrixXd& s);

/// Throws CovarianceNotPsd or InvalidArgument (NaN) when the belief is unhealthy:
/// asymmetry above 1e-10, non-finite entries, or a failing jittered Cholesky.
void check_health(const GaussianBelief& belief);

}  // namespace prosthestim::filters
