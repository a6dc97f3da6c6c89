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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "prosthestim/plant.hpp"

namespace prosthestim::plant {

enum class Task { walking, sitting, running };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);  // throws InvalidArgument

/// Periodic driving signals for one motor task. Phase is in [0, 1).
///
/// The vertical force is described in body weights (F / (m g)); the vertical
/// acceleration follows as g (ratio - 1), so m (g + z_ddot) is the force
/// itself and never negative.
struct GaitProfile {
  Task task = Task::walking;
  double speed_kmh = 2.0;
  double cycle_duration = 1.3;  // s
  double stance_fraction = 0.6;
  double grf_peak = 1.1;        // body weights, varying part
  double grf_baseline = 0.0;    // body weights, constant part
  double cop_heel = -0.05;      // m
  double cop_toe = 0.15;        // m
  double knee_mean = 0.5235987755982988;  // rad
  double knee_amplitude = 0.5235987755982988;
  double knee_phase = 0.7;
  double amplitude_jitter = 0.05;

  /// Cycle-to-cycle scale `amplitude` multiplies the varying part only.
  double grf_ratio(double phase, double amplitude = 1.0) const;
  double vertical_accel(double phase, double gravity, double amplitude = 1.0) const;
  double cop_lever(double phase) const;
  double knee_angle(double phase, double amplitude = 1.0) const;

  void validate() const;
};

/// 1.9 / v + 0.35 seconds, v in km/h.
double walking_cycle_duration(double speed_kmh);
/// 0.45 + 1.5 / v seconds, v in km/h.
double running_cycle_duration(double speed_kmh);

/// Double-bump stance force from two raised cosines, swing for the last 40 %.
GaitProfile walking_profile(double speed_kmh = 2.0);
/// Quiet-sitting postural sway around one body weight; 4 s period.
GaitProfile sitting_profile();
/// Single-bump stance peaking at 2.2 body weights with a flight phase.
GaitProfile running_profile(double speed_kmh = 9.0);
GaitProfile default_profile(Task task);

struct GroundTruthTrace {
  double dt = 0.0;
  double cycle_duration = 0.0;
  std::vector<double> t;
  std::vector<double> phase;
  std::vector<double> theta;
  std::vector<double> theta_dot;
  std::vector<double> z_ddot;
  std::vector<double> r_cop;
  std::vector<double> f_grf;
  std::vector<double> tau_ext;
  std::vector<double> knee_angle;
  std::vector<std::size_t> cycle_starts;

  std::size_t size() const noexcept { return t.size(); }
};

/// Simulates `n_cycles` of the profile from rest at heel strike. The seed only
/// draws the per-cycle amplitude scale, uniform in 1 +/- amplitude_jitter.
GroundTruthTrace generate_gait(const GaitProfile& profile, std::size_t n_cycles,
                               const PlantParams& params, std::uint64_t seed);

/// Columns t,theta,theta_dot,z_ddot,r_cop,f_grf,tau_ext,knee_angle.
void write_trace_csv(const GroundTruthTrace& trace, const std::filesystem::path& path);

/// Reads the CSV written above; phase and cycle starts are rebuilt from
/// `cycle_duration`.
GroundTruthTrace read_trace_csv(const std::filesystem::path& path, double cycle_duration);

/// Sample indices where each cycle starts for a uniformly sampled series.
std::vector<std::size_t> cycle_starts_for(std::size_t n_samples, double dt, double cycle_duration);

}  // namespace prosthestim::plant
