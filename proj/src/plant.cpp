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

#include "prosthestim/plant.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::plant {

namespace {

void require_finite(double value, const char* name) {
  if (!std::isfinite(value))
    throw InvalidArgument(fmt::format("non-finite value for '{}': {}", name, value));
}

}  // namespace

void PlantParams::validate() const {
  require_finite(inertia, "plant.inertia");
  require_finite(damping, "plant.damping");
  require_finite(stiffness, "plant.stiffness");
  require_finite(mass, "plant.mass");
  require_finite(gravity, "plant.gravity");
  require_finite(dt, "plant.dt");
  if (inertia <= 0) throw InvalidArgument(fmt::format("plant.inertia must be > 0, got {}", inertia));
  if (damping < 0) throw InvalidArgument(fmt::format("plant.damping must be >= 0, got {}", damping));
  if (stiffness < 0)
    throw InvalidArgument(fmt::format("plant.stiffness must be >= 0, got {}", stiffness));
  if (mass <= 0) throw InvalidArgument(fmt::format("plant.mass must be > 0, got {}", mass));
  if (dt <= 0) throw InvalidArgument(fmt::format("plant.dt must be > 0, got {}", dt));
}

StateRate state_derivative(const JointState& state, double tau_ext, const PlantParams& params) {
  require_finite(state.theta, "theta");
  require_finite(state.theta_dot, "theta_dot");
  require_finite(tau_ext, "tau_ext");
  return {state.theta_dot,
          (tau_ext - params.damping * state.theta_dot - params.stiffness * state.theta) /
              params.inertia};
}

JointState step(const JointState& state, double tau_ext, const PlantParams& params,
                std::size_t step_index) {
  const double h = params.dt;
  auto advance = [](const JointState& s, const StateRate& r, double scale) {
    return JointState{s.theta + scale * r.theta_dot, s.theta_dot + scale * r.theta_ddot};
  };
  const StateRate k1 = state_derivative(state, tau_ext, params);
  const StateRate k2 = state_derivative(advance(state, k1, h / 2), tau_ext, params);
  const StateRate k3 = state_derivative(advance(state, k2, h / 2), tau_ext, params);
  const StateRate k4 = state_derivative(advance(state, k3, h), tau_ext, params);
  JointState next{
      state.theta + h / 6 * (k1.theta_dot + 2 * k2.theta_dot + 2 * k3.theta_dot + k4.theta_dot),
      state.theta_dot +
          h / 6 * (k1.theta_ddot + 2 * k2.theta_ddot + 2 * k3.theta_ddot + k4.theta_ddot)};
  if (!std::isfinite(next.theta) || !std::isfinite(next.theta_dot) ||
      std::abs(next.theta) > std::numbers::pi) {
    throw SimulationDiverged(
        fmt::format("ankle simulation diverged at step {}: theta = {} rad", step_index, next.theta),
        step_index);
  }
  return next;
}

double grf_from_accel(double z_ddot, const PlantParams& params) {
  require_finite(z_ddot, "z_ddot");
  return std::max(0.0, params.mass * (params.gravity + z_ddot));
}

double torque_from_grf(double r_cop, double f_z) {
  require_finite(r_cop, "r_cop");
  require_finite(f_z, "f_z");
  if (f_z < 0) throw InvalidArgument(fmt::format("f_z must be >= 0, got {}", f_z));
  return r_cop * f_z;
}

OutputVector output_vector(const JointState& state, double z_ddot, double r_cop,
                           const PlantParams& params) {
  require_finite(state.theta, "theta");
  require_finite(state.theta_dot, "theta_dot");
  const double f = grf_from_accel(z_ddot, params);
  return {state.theta, state.theta_dot, f, torque_from_grf(r_cop, f)};
}

}  // namespace prosthestim::plant
