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

#include "prosthestim/error.hpp"
#include "prosthestim/gait.hpp"
#include "prosthestim/sensors.hpp"

using namespace prosthestim;
using namespace prosthestim::sensors;

namespace {

plant::GroundTruthTrace constant_trace(std::size_t n, double force) {
  plant::GroundTruthTrace tr;
  tr.dt = 1e-3;
  tr.cycle_duration = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * tr.dt;
    tr.t.push_back(t);
    tr.phase.push_back(std::fmod(t, 1.0));
    tr.theta.push_back(0);
    tr.theta_dot.push_back(0);
    tr.z_ddot.push_back(0);
    tr.r_cop.push_back(0);
    tr.f_grf.push_back(force);
    tr.tau_ext.push_back(0);
    tr.knee_angle.push_back(0);
  }
  tr.cycle_starts = plant::cycle_starts_for(n, tr.dt, tr.cycle_duration);
  return tr;
}

struct Moments {
  double mean = 0, sd = 0;
};

template <class Get>
Moments moments(const std::vector<SensorFrame>& frames, Get get) {
  double sum = 0, sq = 0;
  for (const auto& f : frames) sum += get(f);
  const double n = static_cast<double>(frames.size());
  const double mean = sum / n;
  for (const auto& f : frames) sq += (get(f) - mean) * (get(f) - mean);
  return {mean, std::sqrt(sq / (n - 1))};
}

void check_noise(const Moments& m, double sigma, double n) {
  CHECK(std::abs(m.mean) < 4 * sigma / std::sqrt(n));
  CHECK(m.sd / sigma > 0.95);
  CHECK(m.sd / sigma < 1.05);
}

}  // namespace

TEST_CASE("zero noise reproduces the truth") {
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 1, plant::PlantParams{}, 1);
  NoiseSpec zero{0, 0, 0, 0, 7};
  const auto frames = corrupt_trace(truth, zero);
  REQUIRE(frames.size() == truth.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].t == truth.t[i]);
    CHECK(frames[i].omega == truth.theta_dot[i]);
    CHECK(frames[i].z_ddot_meas == truth.z_ddot[i]);
    REQUIRE(frames[i].f_z_meas.has_value());
    CHECK(*frames[i].f_z_meas == truth.f_grf[i]);
    CHECK(*frames[i].knee_angle_meas == truth.knee_angle[i]);
  }
}

TEST_CASE("noise is zero-mean with the requested spread on every channel") {
  const std::size_t n = 100000;
  // Large force so the clamp at zero never bites.
  const auto truth = constant_trace(n, 1000.0);
  NoiseSpec noise{0.01, 0.1, 5.0, 0.02, 2024};
  const auto frames = corrupt_trace(truth, noise);
  const double dn = static_cast<double>(n);
  check_noise(moments(frames, [](const SensorFrame& f) { return f.omega; }), 0.01, dn);
  check_noise(moments(frames, [](const SensorFrame& f) { return f.z_ddot_meas; }), 0.1, dn);
  check_noise(moments(frames, [](const SensorFrame& f) { return *f.f_z_meas - 1000.0; }), 5.0, dn);
  check_noise(moments(frames, [](const SensorFrame& f) { return *f.knee_angle_meas; }), 0.02, dn);
}

TEST_CASE("channels are independent substreams") {
  const auto truth = constant_trace(20000, 1000.0);
  const auto frames = corrupt_trace(truth, NoiseSpec{1, 1, 1, 1, 5});
  double cross = 0;
  for (const auto& f : frames) cross += f.omega * f.z_ddot_meas;
  CHECK(std::abs(cross / 20000.0) < 4.0 / std::sqrt(20000.0));
}

TEST_CASE("whole-cycle dropout removes every force sample") {
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 2, plant::PlantParams{}, 1);
  const auto frames = corrupt_trace(truth, NoiseSpec{}, PhaseIntervalSet::whole_cycle());
  for (const auto& f : frames) CHECK_FALSE(f.f_z_meas.has_value());
}

TEST_CASE("dropout follows the phase intervals") {
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 2, plant::PlantParams{}, 1);
  const PhaseIntervalSet gap({{0.9, 0.1}});
  const auto frames = corrupt_trace(truth, NoiseSpec{}, gap);
  for (std::size_t i = 0; i < frames.size(); ++i)
    CHECK(frames[i].f_z_meas.has_value() == !(truth.phase[i] >= 0.9 || truth.phase[i] < 0.1));
}

TEST_CASE("PhaseIntervalSet") {
  const PhaseIntervalSet wrap({{0.8, 0.2}});
  CHECK(wrap.contains(0.9));
  CHECK(wrap.contains(0.0));
  CHECK(wrap.contains(0.19));
  CHECK_FALSE(wrap.contains(0.2));
  CHECK_FALSE(wrap.contains(0.5));
  CHECK(wrap.measure() == doctest::Approx(0.4));
  CHECK(PhaseIntervalSet::whole_cycle().measure() == doctest::Approx(1.0));
  CHECK(PhaseIntervalSet{}.empty());
  CHECK_THROWS_AS(PhaseIntervalSet({{-0.1, 0.2}}), InvalidArgument);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = PhaseIntervalSet::random(0.2, 3, seed);
    CHECK(r.intervals().size() == 3);
    CHECK(r.measure() == doctest::Approx(0.2));
  }
  CHECK(PhaseIntervalSet::random(0.2, 3, 1).intervals() ==
        PhaseIntervalSet::random(0.2, 3, 1).intervals());
}

TEST_CASE("noise_covariance restricts to present channels") {
  const NoiseSpec noise{0.01, 0.1, 5, 0.01, 0};
  const Eigen::MatrixXd full = noise_covariance(noise, {true, true, true});
  REQUIRE(full.rows() == 3);
  CHECK(full(0, 0) == doctest::Approx(1e-4));
  CHECK(full(1, 1) == doctest::Approx(1e-2));
  CHECK(full(2, 2) == doctest::Approx(25));
  CHECK(full(0, 1) == 0.0);

  const Eigen::MatrixXd no_force = noise_covariance(noise, {true, true, false});
  REQUIRE(no_force.rows() == 2);
  CHECK(no_force(0, 0) == doctest::Approx(1e-4));
  CHECK(no_force(1, 1) == doctest::Approx(1e-2));

  const Eigen::MatrixXd zero = noise_covariance(NoiseSpec{0, 0, 0, 0, 0}, {true, true, true});
  CHECK(zero.isZero());
}

TEST_CASE("NoiseSpec validation") {
  NoiseSpec n;
  n.sigma_force = -1;
  CHECK_THROWS_WITH_AS(n.validate(), doctest::Contains("sigma_force"), InvalidArgument);
  n = NoiseSpec{};
  n.sigma_gyro = INFINITY;
  CHECK_THROWS_AS(n.validate(), InvalidArgument);
}

TEST_CASE("corruption is deterministic and force stays non-negative") {
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 2, plant::PlantParams{}, 1);
  NoiseSpec noise;
  noise.sigma_force = 200;  // large enough to cross zero during swing
  noise.seed = 99;
  const auto a = corrupt_trace(truth, noise);
  const auto b = corrupt_trace(truth, noise);
  noise.seed = 100;
  const auto c = corrupt_trace(truth, noise);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].omega == b[i].omega);
    CHECK(a[i].z_ddot_meas == b[i].z_ddot_meas);
    CHECK(*a[i].f_z_meas == *b[i].f_z_meas);
    CHECK(*a[i].f_z_meas >= 0.0);
    differs = differs || a[i].omega != c[i].omega;
  }
  CHECK(differs);
}

TEST_CASE("dropout does not shift the other channels' noise") {
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 1, plant::PlantParams{}, 1);
  NoiseSpec noise;
  noise.seed = 3;
  const auto full = corrupt_trace(truth, noise);
  const auto gapped = corrupt_trace(truth, noise, PhaseIntervalSet({{0.2, 0.5}}));
  for (std::size_t i = 0; i < full.size(); ++i) {
    CHECK(full[i].omega == gapped[i].omega);
    if (gapped[i].f_z_meas) CHECK(*gapped[i].f_z_meas == *full[i].f_z_meas);
  }
}

TEST_CASE("frame CSV round trip keeps NA") {
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 1, plant::PlantParams{}, 1);
  const auto frames = corrupt_trace(truth, NoiseSpec{}, PhaseIntervalSet({{0.0, 0.3}}));
  const auto path = std::filesystem::temp_directory_path() / "prosthestim_frames_test.csv";
  write_frames_csv(frames, path);
  const auto back = read_frames_csv(path);
  REQUIRE(back.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(back[i].t == frames[i].t);
    CHECK(back[i].omega == frames[i].omega);
    CHECK(back[i].f_z_meas == frames[i].f_z_meas);
    CHECK(back[i].knee_angle_meas == frames[i].knee_angle_meas);
  }
  std::filesystem::remove(path);
}
