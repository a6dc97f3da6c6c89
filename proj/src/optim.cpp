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

#include "prosthestim/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::neural {

void AdamParams::validate() const {
  if (!(learning_rate > 0))
    throw InvalidArgument(fmt::format("Adam learning rate must be > 0, got {}", learning_rate));
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw InvalidArgument(fmt::format("Adam betas must lie in [0, 1), got {} and {}", beta1, beta2));
  if (!(epsilon > 0)) throw InvalidArgument(fmt::format("Adam epsilon must be > 0, got {}", epsilon));
}

Adam::Adam(AdamParams params) : params_(params) { params_.validate(); }

void Adam::step(Parameters& params, const Parameters& grads) {
  auto p = params.views();
  const auto g = grads.views();
  if (p.size() != g.size()) throw DimensionMismatch("Adam: gradient layout differs from parameters");
  if (m_.empty()) {
    for (const auto& v : p) {
      m_.emplace_back(v.size(), 0.0);
      v_.emplace_back(v.size(), 0.0);
    }
  }
  if (m_.size() != p.size()) throw DimensionMismatch("Adam: parameter layout changed between steps");

  ++t_;
  const double b1 = params_.beta1, b2 = params_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size() || p[k].size() != m_[k].size())
      throw DimensionMismatch(fmt::format("Adam: tensor {} changed size", k));
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t j = 0; j < p[k].size(); ++j) {
      const double gj = g[k][j];
      m[j] = b1 * m[j] + (1.0 - b1) * gj;
      v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
      p[k][j] -= params_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + params_.epsilon);
    }
  }
}

double clip_global_norm(Parameters& grads, double max_norm) {
  double sq = 0;
  for (const auto& v : grads.views())
    for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& v : grads.views())
      for (double& x : v) x *= scale;
  }
  return norm;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw InvalidArgument(fmt::format("patience must be >= 1, got {}", patience));
}

bool EarlyStopping::update(double loss) {
  ++epoch_;
  if (std::isnan(loss))
    throw TrainingDiverged(fmt::format("validation loss is NaN at epoch {}", epoch_),
                           static_cast<std::size_t>(epoch_));
  improved_ = loss < best_;
  if (improved_) {
    best_ = loss;
    best_epoch_ = epoch_;
  }
  stopped_ = epoch_ - best_epoch_ >= patience_;
  return stopped_;
}

}  // namespace prosthestim::neural
