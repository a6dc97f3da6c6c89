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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "prosthestim/error.hpp"
#include "prosthestim/gait.hpp"
#include "prosthestim/plant.hpp"
#include "prosthestim/rng.hpp"

using namespace prosthestim;
using namespace prosthestim::plant;

namespace {

PlantParams soft_plant() {
  PlantParams p;
  p.stiffness = 10.0;
  return p;
}

// Integrates for `duration` seconds: whole steps of params.dt, then one
// partial step for the remainder.
JointState integrate(JointState s, double tau, PlantParams params, double duration) {
  const auto n = static_cast<std::size_t>(std::floor(duration / params.dt));
  for (std::size_t i = 0; i < n; ++i) s = step(s, tau, params, i);
  const double rest = duration - static_cast<double>(n) * params.dt;
  if (rest > 0) {
    params.dt = rest;
    s = step(s, tau, params, n);
  }
  return s;
}

}  // namespace

TEST_CASE("state_derivative matches the torque balance") {
  const PlantParams p = soft_plant();
  auto r = state_derivative({0, 0}, 0, p);
  CHECK(r.theta_dot == 0.0);
  CHECK(r.theta_ddot == 0.0);

  // Static balance: theta = tau0 / k.
  const double tau0 = 3.7;
  r = state_derivative({tau0 / p.stiffness, 0}, tau0, p);
  CHECK(r.theta_dot == 0.0);
  CHECK(r.theta_ddot == doctest::Approx(0.0).epsilon(1e-12));

  PlantParams q;
  q.inertia = 0.1;
  q.damping = 0.5;
  q.stiffness = 10;
  r = state_derivative({0.1, 0.2}, 2.0, q);
  CHECK(r.theta_dot == doctest::Approx(0.2));
  CHECK(r.theta_ddot == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("state_derivative rejects non-finite inputs by name") {
  const PlantParams p;
  CHECK_THROWS_WITH_AS(state_derivative({NAN, 0}, 0, p), doctest::Contains("theta"), InvalidArgument);
  CHECK_THROWS_WITH_AS(state_derivative({0, 0}, INFINITY, p), doctest::Contains("tau_ext"),
                       InvalidArgument);
}

TEST_CASE("PlantParams validation names the field") {
  PlantParams p;
  p.dt = 0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("dt"), InvalidArgument);
  p = PlantParams{};
  p.inertia = -1;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("inertia"), InvalidArgument);
  p = PlantParams{};
  p.damping = NAN;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("step keeps equilibrium") {
  const auto s = step({0, 0}, 0, PlantParams{});
  CHECK(s.theta == 0.0);
  CHECK(s.theta_dot == 0.0);
}

TEST_CASE("undamped oscillation returns after one analytic period") {
  PlantParams p;
  p.damping = 0;
  p.dt = 1e-4;
  const double period = 2 * std::numbers::pi * std::sqrt(p.inertia / p.stiffness);
  const JointState start{0.2, 0.0};
  const JointState end = integrate(start, 0.0, p, period);
  CHECK(std::abs(end.theta - start.theta) < 1e-6);
}

TEST_CASE("constant torque settles at tau0 / k") {
  PlantParams p = soft_plant();
  const double tau0 = 1.0;
  const double time_constant = 2 * p.inertia / p.damping;
  const JointState end = integrate({0, 0}, tau0, p, 10 * time_constant);
  CHECK(std::abs(end.theta - tau0 / p.stiffness) < 1e-4);
}

TEST_CASE("step reports divergence with the step index") {
  PlantParams p = soft_plant();
  try {
    JointState s;
    for (std::size_t i = 0; i < 100000; ++i) s = step(s, 200.0, p, i);
    FAIL("expected divergence");
  } catch (const SimulationDiverged& e) {
    CHECK(e.step_index() > 0);
  }
}

TEST_CASE("RK4 error shrinks by ~16x when dt halves") {
  PlantParams p;
  p.damping = 0;
  const double omega = std::sqrt(p.stiffness / p.inertia);
  const double theta0 = 0.1;
  const double horizon = 0.05;
  auto error_at = [&](double dt) {
    PlantParams q = p;
    q.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
    JointState s{theta0, 0};
    for (std::size_t i = 0; i < n; ++i) s = step(s, 0, q, i);
    return std::abs(s.theta - theta0 * std::cos(omega * horizon));
  };
  const double ratio = error_at(1e-3) / error_at(5e-4);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("energy never increases with damping and no torque") {
  PlantParams p;
  JointState s{0.3, -2.0};
  auto energy = [&](const JointState& x) {
    return 0.5 * p.inertia * x.theta_dot * x.theta_dot + 0.5 * p.stiffness * x.theta * x.theta;
  };
  double e = energy(s);
  for (std::size_t i = 0; i < 5000; ++i) {
    s = step(s, 0, p, i);
    const double next = energy(s);
    REQUIRE(next <= e + 1e-9);
    e = next;
  }
}

TEST_CASE("state_derivative is linear in (theta, theta_dot, tau)") {
  Rng rng(11);
  const PlantParams p;
  for (int trial = 0; trial < 200; ++trial) {
    const JointState a{rng.uniform(-1, 1), rng.uniform(-5, 5)};
    const JointState b{rng.uniform(-1, 1), rng.uniform(-5, 5)};
    const double ta = rng.uniform(-50, 50), tb = rng.uniform(-50, 50);
    const auto ra = state_derivative(a, ta, p);
    const auto rb = state_derivative(b, tb, p);
    const auto rs = state_derivative({a.theta + b.theta, a.theta_dot + b.theta_dot}, ta + tb, p);
    CHECK(std::abs(rs.theta_dot - ra.theta_dot - rb.theta_dot) < 1e-12);
    CHECK(std::abs(rs.theta_ddot - ra.theta_ddot - rb.theta_ddot) <
          1e-12 * std::max(1.0, std::abs(rs.theta_ddot)));
  }
}

TEST_CASE("grf_from_accel") {
  PlantParams p;
  p.mass = 70;
  CHECK(grf_from_accel(0.0, p) == doctest::Approx(686.7));
  CHECK(grf_from_accel(-9.81, p) == 0.0);
  CHECK(grf_from_accel(2.0, p) == doctest::Approx(826.7));
  CHECK(grf_from_accel(-30.0, p) == 0.0);
  CHECK_THROWS_AS(grf_from_accel(NAN, p), InvalidArgument);
}

TEST_CASE("torque_from_grf") {
  CHECK(torque_from_grf(0.0, 512.0) == 0.0);
  CHECK(torque_from_grf(0.1, 686.7) == doctest::Approx(68.67));
  CHECK(torque_from_grf(-0.05, 400) == doctest::Approx(-20.0));
  CHECK_THROWS_AS(torque_from_grf(0.1, -1.0), InvalidArgument);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double r = rng.uniform(-0.2, 0.2), f = rng.uniform(1e-3, 2000);
    CHECK((torque_from_grf(r, f) > 0) == (r > 0));
  }
}

TEST_CASE("output_vector composes force and torque") {
  PlantParams p;
  p.mass = 70;
  auto y = output_vector({0.1, 0}, 0.0, 0.1, p);
  CHECK(y.theta == 0.1);
  CHECK(y.theta_dot == 0.0);
  CHECK(y.f_grf == doctest::Approx(686.7));
  CHECK(y.tau_ext == doctest::Approx(68.67));

  y = output_vector({0, 0}, -p.gravity, 0.3, p);
  CHECK(y.f_grf == 0.0);
  CHECK(y.tau_ext == 0.0);

  p.mass = 60;
  y = output_vector({0.2, -0.3}, 1.0, 0.12, p);
  CHECK(y.theta == 0.2);
  CHECK(y.theta_dot == -0.3);
  CHECK(y.f_grf == doctest::Approx(648.6));
  CHECK(y.tau_ext == doctest::Approx(77.832));
}

TEST_CASE("generate_gait: one walking cycle") {
  const PlantParams p;
  const GaitProfile profile = walking_profile(2.0);
  const auto trace = generate_gait(profile, 1, p, 5);
  CHECK(trace.size() == static_cast<std::size_t>(std::llround(profile.cycle_duration / p.dt)));

  int maxima = 0;
  for (std::size_t i = 1; i + 1 < trace.size(); ++i)
    if (trace.f_grf[i] > trace.f_grf[i - 1] && trace.f_grf[i] >= trace.f_grf[i + 1]) ++maxima;
  CHECK(maxima == 2);

  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(trace.f_grf[i] >= 0.0);
    CHECK(std::abs(trace.theta[i]) <= std::numbers::pi);
    CHECK(trace.f_grf[i] == doctest::Approx(p.mass * (p.gravity + trace.z_ddot[i])));
  }
}

TEST_CASE("generate_gait is deterministic per seed") {
  const auto a = generate_gait(walking_profile(2.0), 3, PlantParams{}, 42);
  const auto b = generate_gait(walking_profile(2.0), 3, PlantParams{}, 42);
  const auto c = generate_gait(walking_profile(2.0), 3, PlantParams{}, 43);
  CHECK(a.theta == b.theta);
  CHECK(a.f_grf == b.f_grf);
  CHECK(a.knee_angle == b.knee_angle);
  CHECK(a.f_grf != c.f_grf);
}

TEST_CASE("cycle duration decreases with speed") {
  CHECK(walking_profile(3).cycle_duration < walking_profile(1).cycle_duration);
  CHECK(walking_cycle_duration(2.0) == doctest::Approx(1.3));
}

TEST_CASE("amplitude jitter stays within 5 percent per cycle") {
  const PlantParams p;
  const auto profile = walking_profile(2.0);
  const auto trace = generate_gait(profile, 6, p, 9);
  const double nominal = profile.grf_peak * p.mass * p.gravity;
  for (std::size_t c = 0; c < trace.cycle_starts.size(); ++c) {
    const std::size_t begin = trace.cycle_starts[c];
    const std::size_t end = c + 1 < trace.cycle_starts.size() ? trace.cycle_starts[c + 1] : trace.size();
    double peak = 0;
    for (std::size_t i = begin; i < end; ++i) peak = std::max(peak, trace.f_grf[i]);
    CHECK(peak <= nominal * 1.05 + 1e-9);
    CHECK(peak >= nominal * 0.95 - 1.0);
  }
}

TEST_CASE("every task profile keeps the force non-negative and the joint in range") {
  const PlantParams p;
  for (Task task : {Task::walking, Task::sitting, Task::running}) {
    const auto trace = generate_gait(default_profile(task), 3, p, 1);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      REQUIRE(trace.f_grf[i] >= 0.0);
      REQUIRE(std::abs(trace.theta[i]) < 1.0);
    }
  }
  CHECK(parse_task("running") == Task::running);
  CHECK_THROWS_AS(parse_task("jogging"), InvalidArgument);
}

TEST_CASE("walking profile validation") {
  auto profile = walking_profile(2.0);
  profile.speed_kmh = 9.0;
  CHECK_THROWS_AS(profile.validate(), InvalidArgument);
  profile = walking_profile(2.0);
  profile.cycle_duration = 0;
  CHECK_THROWS_AS(profile.validate(), InvalidArgument);
  CHECK_THROWS_AS(generate_gait(walking_profile(2.0), 0, PlantParams{}, 1), InvalidArgument);
}

TEST_CASE("trace CSV round trip") {
  const auto trace = generate_gait(walking_profile(2.0), 1, PlantParams{}, 2);
  const auto path = std::filesystem::temp_directory_path() / "prosthestim_trace_test.csv";
  write_trace_csv(trace, path);
  const auto back = read_trace_csv(path, trace.cycle_duration);
  CHECK(back.theta == trace.theta);
  CHECK(back.f_grf == trace.f_grf);
  CHECK(back.cycle_starts == trace.cycle_starts);
  std::filesystem::remove(path);
}
