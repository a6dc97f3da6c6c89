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

#include "prosthestim/estimator.hpp"

#include <Eigen/Cholesky>

#include "prosthestim/csv.hpp"
#include "prosthestim/error.hpp"

namespace prosthestim::filters {

double Correction::nis() const {
  if (innovation.size() == 0) return 0.0;
  return innovation.dot(innovation_cov.ldlt().solve(innovation));
}

std::vector<double> FilterTrace::component(int index) const {
  std::vector<double> out;
  out.reserve(mean.size());
  for (const auto& m : mean) out.push_back(m(index));
  return out;
}

FilterTrace run_filter(Estimator& estimator, const std::vector<sensors::SensorFrame>& frames,
                       const std::vector<double>& r_cop, const GaussianBelief& initial) {
  if (r_cop.size() != frames.size())
    throw DimensionMismatch("run_filter: lever-arm series and frame stream differ in length");
  estimator.reset(initial);
  FilterTrace trace;
  trace.t.reserve(frames.size());
  trace.mean.reserve(frames.size());
  trace.cov_diag.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) estimator.predict(r_cop[i - 1]);
    const Correction c = estimator.update(frames[i]);
    trace.t.push_back(frames[i].t);
    trace.mean.push_back(c.belief.mean);
    trace.cov_diag.push_back(c.belief.cov.diagonal());
    trace.nis.push_back(c.nis());
    trace.measurement_dim.push_back(static_cast<int>(c.innovation.size()));
  }
  return trace;
}

void write_filter_trace_csv(const FilterTrace& trace, const std::filesystem::path& path) {
  csv::Writer out(path, {"t", "theta_hat", "theta_dot_hat", "f_z_hat", "p11", "p22", "p33"});
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& m = trace.mean[i];
    const auto& p = trace.cov_diag[i];
    out.numbers({trace.t[i], m(0), m(1), m(2), p(0), p(1), p(2)});
  }
}

}  // namespace prosthestim::filters
