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

#include "prosthestim/gait.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "prosthestim/csv.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/rng.hpp"

namespace prosthestim::plant {

namespace {

constexpr double kPi = std::numbers::pi;

double raised_cosine(double s, double centre, double half_width) {
  const double d = s - centre;
  if (std::abs(d) >= half_width) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * d / half_width));
}

double wrap_phase(double phase) {
  double p = phase - std::floor(phase);
  return p >= 1.0 ? 0.0 : p;
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::walking: return "walking";
    case Task::sitting: return "sitting";
    case Task::running: return "running";
  }
  return "walking";
}

Task parse_task(std::string_view name) {
  if (name == "walking") return Task::walking;
  if (name == "sitting") return Task::sitting;
  if (name == "running") return Task::running;
  throw InvalidArgument(fmt::format("unknown task '{}' (expected walking|sitting|running)", name));
}

double GaitProfile::grf_ratio(double phase, double amplitude) const {
  const double p = wrap_phase(phase);
  switch (task) {
    case Task::sitting:
      return grf_baseline + amplitude * grf_peak * std::sin(2 * kPi * p);
    case Task::running: {
      if (p >= stance_fraction) return grf_baseline;
      const double s = p / stance_fraction;
      return grf_baseline + amplitude * grf_peak * raised_cosine(s, 0.5, 0.5);
    }
    case Task::walking:
    default: {
      if (p >= stance_fraction) return grf_baseline;
      const double s = p / stance_fraction;
      // Loading and push-off peaks at 30 % and 70 % of stance; each cosine
      // vanishes outside the other's peak so both maxima equal grf_peak.
      return grf_baseline +
             amplitude * grf_peak * (raised_cosine(s, 0.3, 0.3) + raised_cosine(s, 0.7, 0.3));
    }
  }
}

double GaitProfile::vertical_accel(double phase, double gravity, double amplitude) const {
  return gravity * (grf_ratio(phase, amplitude) - 1.0);
}

double GaitProfile::cop_lever(double phase) const {
  const double p = wrap_phase(phase);
  if (task == Task::sitting) {
    const double mid = 0.5 * (cop_heel + cop_toe);
    const double half = 0.5 * (cop_toe - cop_heel);
    return mid + half * std::sin(2 * kPi * p + kPi / 3);
  }
  if (p < stance_fraction) return cop_heel + (cop_toe - cop_heel) * (p / stance_fraction);
  // Swing: return to the heel so the lever arm stays periodic and continuous.
  return cop_toe - (cop_toe - cop_heel) * ((p - stance_fraction) / (1.0 - stance_fraction));
}

double GaitProfile::knee_angle(double phase, double amplitude) const {
  const double p = wrap_phase(phase);
  return knee_mean - amplitude * knee_amplitude * std::cos(2 * kPi * (p - knee_phase));
}

void GaitProfile::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidArgument(msg); };
  for (double v : {speed_kmh, cycle_duration, stance_fraction, grf_peak, grf_baseline, cop_heel,
                   cop_toe, knee_mean, knee_amplitude, knee_phase, amplitude_jitter})
    if (!std::isfinite(v)) fail("gait profile contains a non-finite parameter");
  if (cycle_duration <= 0) fail(fmt::format("gait.cycle_duration must be > 0, got {}", cycle_duration));
  if (task == Task::walking && (speed_kmh < 0.5 || speed_kmh > 6.0))
    fail(fmt::format("gait.speed_kmh for walking must lie in [0.5, 6] km/h, got {}", speed_kmh));
  if (task == Task::running && speed_kmh <= 0)
    fail(fmt::format("gait.speed_kmh for running must be > 0, got {}", speed_kmh));
  if (stance_fraction <= 0 || stance_fraction > 1)
    fail(fmt::format("gait.stance_fraction must lie in (0, 1], got {}", stance_fraction));
  if (amplitude_jitter < 0 || amplitude_jitter >= 1)
    fail(fmt::format("gait.amplitude_jitter must lie in [0, 1), got {}", amplitude_jitter));
  if (grf_peak < 0) fail(fmt::format("gait.grf_peak must be >= 0, got {}", grf_peak));
  // Lowest force over a cycle must stay non-negative at the largest jitter.
  const double swing = task == Task::sitting ? grf_peak * (1 + amplitude_jitter) : 0.0;
  if (grf_baseline - swing < 0)
    fail("gait profile would pull on the ground (negative vertical force)");
}

double walking_cycle_duration(double speed_kmh) { return 1.9 / speed_kmh + 0.35; }

double running_cycle_duration(double speed_kmh) { return 0.45 + 1.5 / speed_kmh; }

GaitProfile walking_profile(double speed_kmh) {
  GaitProfile p;
  p.task = Task::walking;
  p.speed_kmh = speed_kmh;
  p.cycle_duration = walking_cycle_duration(speed_kmh);
  return p;
}

GaitProfile sitting_profile() {
  GaitProfile p;
  p.task = Task::sitting;
  p.speed_kmh = 0.0;
  p.cycle_duration = 4.0;
  p.stance_fraction = 1.0;
  p.grf_baseline = 1.0;
  p.grf_peak = 0.05;
  p.cop_heel = 0.02;
  p.cop_toe = 0.06;
  p.knee_mean = kPi / 2;
  p.knee_amplitude = 0.035;
  p.knee_phase = 0.25;
  return p;
}

GaitProfile running_profile(double speed_kmh) {
  GaitProfile p;
  p.task = Task::running;
  p.speed_kmh = speed_kmh;
  p.cycle_duration = running_cycle_duration(speed_kmh);
  p.stance_fraction = 0.35;
  p.grf_peak = 2.2;
  p.cop_heel = -0.02;
  p.cop_toe = 0.12;
  p.knee_mean = 0.7853981633974483;
  p.knee_amplitude = 0.6981317007977318;
  p.knee_phase = 0.65;
  return p;
}

GaitProfile default_profile(Task task) {
  switch (task) {
    case Task::sitting: return sitting_profile();
    case Task::running: return running_profile();
    case Task::walking:
    default: return walking_profile();
  }
}

std::vector<std::size_t> cycle_starts_for(std::size_t n_samples, double dt,
                                          double cycle_duration) {
  std::vector<std::size_t> starts;
  std::size_t current = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto c = static_cast<std::size_t>(std::floor(static_cast<double>(i) * dt / cycle_duration));
    if (c != current) {
      starts.push_back(i);
      current = c;
    }
  }
  return starts;
}

GroundTruthTrace generate_gait(const GaitProfile& profile, std::size_t n_cycles,
                               const PlantParams& params, std::uint64_t seed) {
  if (n_cycles < 1) throw InvalidArgument("generate_gait needs n_cycles >= 1");
  profile.validate();
  params.validate();

  Rng rng(derive_seed(seed, "gait.amplitude"));
  std::vector<double> amplitude(n_cycles + 1);
  for (double& a : amplitude) a = 1.0 + profile.amplitude_jitter * (2.0 * rng.uniform() - 1.0);

  const auto n = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_cycles) * profile.cycle_duration / params.dt));
  GroundTruthTrace trace;
  trace.dt = params.dt;
  trace.cycle_duration = profile.cycle_duration;
  for (auto* v : {&trace.t, &trace.phase, &trace.theta, &trace.theta_dot, &trace.z_ddot,
                  &trace.r_cop, &trace.f_grf, &trace.tau_ext, &trace.knee_angle})
    v->reserve(n);

  JointState state;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * params.dt;
    const double cycles = t / profile.cycle_duration;
    const auto cycle = std::min(static_cast<std::size_t>(std::floor(cycles)), n_cycles);
    const double phase = wrap_phase(cycles);
    const double a = amplitude[cycle];

    const double z_ddot = profile.vertical_accel(phase, params.gravity, a);
    const double r = profile.cop_lever(phase);
    const double f = grf_from_accel(z_ddot, params);
    const double tau = torque_from_grf(r, f);

    trace.t.push_back(t);
    trace.phase.push_back(phase);
    trace.theta.push_back(state.theta);
    trace.theta_dot.push_back(state.theta_dot);
    trace.z_ddot.push_back(z_ddot);
    trace.r_cop.push_back(r);
    trace.f_grf.push_back(f);
    trace.tau_ext.push_back(tau);
    trace.knee_angle.push_back(profile.knee_angle(phase, a));

    state = step(state, tau, params, i);
  }
  trace.cycle_starts = cycle_starts_for(n, params.dt, profile.cycle_duration);
  return trace;
}

void write_trace_csv(const GroundTruthTrace& trace, const std::filesystem::path& path) {
  csv::Writer out(path, {"t", "theta", "theta_dot", "z_ddot", "r_cop", "f_grf", "tau_ext",
                         "knee_angle"});
  for (std::size_t i = 0; i < trace.size(); ++i)
    out.numbers({trace.t[i], trace.theta[i], trace.theta_dot[i], trace.z_ddot[i], trace.r_cop[i],
                 trace.f_grf[i], trace.tau_ext[i], trace.knee_angle[i]});
}

GroundTruthTrace read_trace_csv(const std::filesystem::path& path, double cycle_duration) {
  const auto table = csv::read(path, true);
  const std::size_t ct = table.column_index("t"), cth = table.column_index("theta"),
                    ctd = table.column_index("theta_dot"), cz = table.column_index("z_ddot"),
                    cr = table.column_index("r_cop"), cf = table.column_index("f_grf"),
                    ctau = table.column_index("tau_ext"), ck = table.column_index("knee_angle");
  GroundTruthTrace trace;
  trace.cycle_duration = cycle_duration;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    trace.t.push_back(table.number(i, ct));
    trace.theta.push_back(table.number(i, cth));
    trace.theta_dot.push_back(table.number(i, ctd));
    trace.z_ddot.push_back(table.number(i, cz));
    trace.r_cop.push_back(table.number(i, cr));
    trace.f_grf.push_back(table.number(i, cf));
    trace.tau_ext.push_back(table.number(i, ctau));
    trace.knee_angle.push_back(table.number(i, ck));
    trace.phase.push_back(wrap_phase(trace.t.back() / cycle_duration));
  }
  trace.dt = trace.size() > 1 ? trace.t[1] - trace.t[0] : 0.0;
  if (trace.dt > 0) trace.cycle_starts = cycle_starts_for(trace.size(), trace.dt, cycle_duration);
  return trace;
}

}  // namespace prosthestim::plant
