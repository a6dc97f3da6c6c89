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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "prosthestim/belief.hpp"
#include "prosthestim/sensors.hpp"

namespace prosthestim::filters {

/// Posterior of a measurement update plus the innovation it was built from.
struct Correction {
  GaussianBelief belief;
  sensors::ChannelMask mask;
  Eigen::VectorXd innovation;
  Eigen::MatrixXd innovation_cov;

  /// Normalised innovation squared, nu^T S^-1 nu.
  double nis() const;
};

/// Recursive estimator over the augmented state. Instances own their belief
/// and are stepped by a single caller.
class Estimator {
public:
  virtual ~Estimator() = default;

  virtual std::string_view name() const = 0;
  virtual void reset(const GaussianBelief& initial) = 0;
  /// Advance one sample interval with the lever arm held at `r_cop`.
  virtual void predict(double r_cop) = 0;
  virtual Correction update(const sensors::SensorFrame& frame) = 0;
  virtual const GaussianBelief& belief() const = 0;
};

struct FilterTrace {
  std::vector<double> t;
  std::vector<StateVector> mean;
  std::vector<StateVector> cov_diag;
  std::vector<double> nis;
  std::vector<int> measurement_dim;

  std::size_t size() const noexcept { return t.size(); }
  std::vector<double> component(int index) const;
};

/// Runs predict/update over the frame stream. Frame i > 0 is preceded by a
/// prediction with lever arm r_cop[i - 1]; frame 0 updates the prior directly.
FilterTrace run_filter(Estimator& estimator, const std::vector<sensors::SensorFrame>& frames,
                       const std::vector<double>& r_cop, const GaussianBelief& initial);

/// Columns t,theta_hat,theta_dot_hat,f_z_hat,p11,p22,p33.
void write_filter_trace_csv(const FilterTrace& trace, const std::filesystem::path& path);

}  // namespace prosthestim::filters
