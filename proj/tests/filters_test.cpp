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
#include <fstream>
#include <optional>
#include <memory>

#include <Eigen/Dense>

#include "prosthestim/ekf.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/kf.hpp"
#include "prosthestim/rng.hpp"
#include "prosthestim/ukf.hpp"

using namespace prosthestim;
using namespace prosthestim::filters;

namespace {

// Gait torques are sized for the stiff default joint; the soft joint used for
// the cross-filter comparisons gets a proportionally shorter lever arm.
constexpr double kSoftLever = 0.03;

std::vector<double> soft_levers(const std::vector<double>& r) {
  std::vector<double> out(r);
  for (double& v : out) v *= kSoftLever;
  return out;
}

plant::PlantParams soft_plant() {
  plant::PlantParams p;
  p.stiffness = 10.0;
  return p;
}

// For a fixed lever arm the RK4 step of a linear system is the fourth-order
// Taylor polynomial of exp(A dt).
StateMatrix rk4_transition_oracle(const plant::PlantParams& p, double r) {
  StateMatrix a = StateMatrix::Zero();
  a(0, 1) = 1;
  a(1, 0) = -p.stiffness / p.inertia;
  a(1, 1) = -p.damping / p.inertia;
  a(1, 2) = r / p.inertia;
  const StateMatrix h = a * p.dt;
  const StateMatrix h2 = h * h;
  return StateMatrix::Identity() + h + h2 / 2 + h2 * h / 6 + h2 * h2 / 24;
}

Eigen::MatrixXd h_oracle(bool force, double mass) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(force ? 3 : 2, 3);
  h(0, 1) = 1;
  h(1, 2) = 1 / mass;
  if (force) h(2, 2) = 1;
  return h;
}

Eigen::VectorXd y_of(const sensors::SensorFrame& f, double gravity) {
  Eigen::VectorXd y(f.f_z_meas ? 3 : 2);
  y(0) = f.omega;
  y(1) = f.z_ddot_meas + gravity;  // affine offset moved to the measurement side
  if (f.f_z_meas) y(2) = *f.f_z_meas;
  return y;
}

// Independent linear KF step written directly from the textbook equations.
GaussianBelief oracle_step(const GaussianBelief& b, const StateMatrix& phi, const StateMatrix& q,
                           const sensors::SensorFrame* frame, const Eigen::MatrixXd& r,
                           double mass, double gravity) {
  GaussianBelief out;
  out.mean = phi * b.mean;
  out.cov = phi * b.cov * phi.transpose() + q;
  if (!frame) return out;
  const Eigen::MatrixXd h = h_oracle(frame->f_z_meas.has_value(), mass);
  const Eigen::MatrixXd s = h * out.cov * h.transpose() + r;
  const Eigen::MatrixXd k = out.cov * h.transpose() * s.inverse();
  out.mean = out.mean + k * (y_of(*frame, gravity) - h * out.mean);
  out.cov = (StateMatrix::Identity() - k * h) * out.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Largest deviation per component over a run, divided by that component's
// peak magnitude (floored at 1).
struct RunDiff {
  StateVector err = StateVector::Zero();
  StateVector scale = StateVector::Ones();

  void add(const StateVector& a, const StateVector& b) {
    err = err.cwiseMax((a - b).cwiseAbs());
    scale = scale.cwiseMax(b.cwiseAbs());
  }
  double worst() const { return err.cwiseQuotient(scale).maxCoeff(); }
};

GaussianBelief some_belief() {
  GaussianBelief b;
  b.mean << 0.05, -0.3, 600.0;
  b.cov << 1e-4, 2e-5, 0.01, 2e-5, 4e-3, 0.05, 0.01, 0.05, 400.0;
  return b;
}

sensors::SensorFrame frame_at(double omega, double accel, std::optional<double> force) {
  sensors::SensorFrame f;
  f.omega = omega;
  f.z_ddot_meas = accel;
  f.f_z_meas = force;
  return f;
}

}  // namespace

TEST_CASE("sigma points collapse onto the mean for zero covariance") {
  const Eigen::Vector3d mean(0.1, -0.2, 500);
  const auto sp = sigma_points(mean, Eigen::Matrix3d::Zero(), UkfParams{});
  REQUIRE(sp.points.cols() == 7);
  for (int i = 0; i < 7; ++i) CHECK((sp.points.col(i) - mean).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("sigma point weights") {
  const UkfParams def{};
  const auto sp = sigma_points(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), def);
  CHECK(sp.points.cols() == 7);
  CHECK(std::abs(sp.wm.sum() - 1.0) < 1e-9);
  const double lam = def.lambda(3);
  CHECK(sp.wm(0) == doctest::Approx(lam / (3 + lam)));
  CHECK(sp.wc(0) == doctest::Approx(lam / (3 + lam) + 1 - 1e-6 + 2));
  for (int i = 1; i < 7; ++i) {
    CHECK(sp.wm(i) == doctest::Approx(1 / (2 * (3 + lam))));
    CHECK(sp.wc(i) == sp.wm(i));
  }

  const UkfParams unit{1.0, 0.0, 0.0};
  const auto one = sigma_points(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), unit);
  CHECK(unit.lambda(1) == 0.0);
  REQUIRE(one.points.cols() == 3);
  CHECK(one.points(0, 0) == 0.0);
  CHECK(one.points(0, 1) == doctest::Approx(1.0));
  CHECK(one.points(0, 2) == doctest::Approx(-1.0));
  CHECK(one.wm(0) == 0.0);
  CHECK(one.wm(1) == 0.5);
  CHECK(one.wm(2) == 0.5);
  CHECK(one.wm.sum() == 1.0);
}

TEST_CASE("weights normalise for a grid of parameters") {
  for (double alpha : {1e-3, 0.1, 0.5, 1.0})
    for (double kappa : {0.0, 1.0, 3.0})
      for (int n : {1, 2, 3, 5}) {
        const UkfParams p{alpha, 2.0, kappa};
        const auto sp =
            sigma_points(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), p);
        CHECK(std::abs(sp.wm.sum() - 1.0) < 1e-9);
      }
}

TEST_CASE("UkfParams validation") {
  CHECK_THROWS_AS(UkfParams({0.0, 2, 0}).validate(3), InvalidArgument);
  CHECK_THROWS_AS(UkfParams({1.5, 2, 0}).validate(3), InvalidArgument);
  CHECK_THROWS_AS(UkfParams({1e-3, -1, 0}).validate(3), InvalidArgument);
  CHECK_NOTHROW(UkfParams{}.validate(3));
}

TEST_CASE("sigma_points reports a non-PSD covariance") {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(2, 2) = -5;
  try {
    sigma_points(Eigen::Vector3d::Zero(), bad, UkfParams{});
    FAIL("expected CovarianceNotPsd");
  } catch (const CovarianceNotPsd& e) {
    CHECK(e.matrix()(2, 2) == -5);
  }
}

TEST_CASE("ukf_predict with zero spread follows the plant") {
  const auto model = ProcessModel::make(plant::PlantParams{}, 0, 0, 0);
  GaussianBelief b;
  b.mean << 0.1, 0.5, 700;
  b.cov.setZero();
  const auto pred = ukf_predict(b, 0.08, model, UkfParams{});
  const auto s = plant::step({0.1, 0.5}, 0.08 * 700, model.plant);
  CHECK(std::abs(pred.mean(0) - s.theta) < 1e-9);
  CHECK(std::abs(pred.mean(1) - s.theta_dot) < 1e-9);
  CHECK(std::abs(pred.mean(2) - 700) < 1e-9);
}

TEST_CASE("ukf_predict adds Q to a collapsed belief") {
  plant::PlantParams p = soft_plant();
  p.dt = 1e-6;
  const auto model = ProcessModel::make(p, 1e-4, 2e-3, 9.0);
  GaussianBelief b;
  b.mean << 0.0, 0.0, 100.0;
  b.cov.setZero();
  const auto pred = ukf_predict(b, 0.05, model, UkfParams{});
  CHECK((pred.cov - model.q).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("ukf_predict matches the linear prediction") {
  const auto model = ProcessModel::make(soft_plant(), 1e-8, 1e-6, 4.0);
  const GaussianBelief b = some_belief();
  const auto pred = ukf_predict(b, 0.1, model, UkfParams{});
  const StateMatrix phi = rk4_transition_oracle(model.plant, 0.1);
  CHECK(rel_diff(pred.mean, phi * b.mean) < 1e-8);
  CHECK(rel_diff(pred.cov, phi * b.cov * phi.transpose() + model.q) < 1e-8);
}

TEST_CASE("RK4 oracle agrees with the exact discretisation on the soft plant") {
  const auto p = soft_plant();
  CHECK(rel_diff(discrete_transition(p, 0.1), rk4_transition_oracle(p, 0.1)) < 1e-8);
}

TEST_CASE("ukf_update with an uninformative measurement keeps the prior") {
  const plant::PlantParams p;
  const auto meas = MeasurementModel::from(p);
  const GaussianBelief b = some_belief();
  const auto frame = frame_at(0.4, 2.0, 800.0);
  const Eigen::MatrixXd r = sensors::noise_covariance(sensors::NoiseSpec{}, {true, true, true}) * 1e12;
  const auto post = ukf_update(b, frame, r, meas, UkfParams{});
  CHECK(rel_diff(post.belief.mean, b.mean) < 1e-6);
  CHECK(rel_diff(post.belief.cov, b.cov) < 1e-6);
}

TEST_CASE("ukf_update with an exact measurement recovers the observed components") {
  const plant::PlantParams p;
  const auto meas = MeasurementModel::from(p);
  GaussianBelief b;
  b.mean << 0.02, 0.0, 500.0;
  // The accelerometer and force plate both observe f_z, so a small prior spread
  // keeps the innovation covariance well inside the invertible range.
  b.cov = Eigen::Vector3d(1e-2, 1.0, 1.0).asDiagonal();
  const double omega = 0.7, force = 760.0;
  const auto frame = frame_at(omega, force / p.mass - p.gravity, force);
  const Eigen::MatrixXd r = 1e-12 * Eigen::MatrixXd::Identity(3, 3);
  const auto post = ukf_update(b, frame, r, meas, UkfParams{});
  // theta is unobserved and uncorrelated, so the least-squares state keeps its prior value.
  CHECK(std::abs(post.belief.mean(0) - 0.02) < 1e-4);
  CHECK(std::abs(post.belief.mean(1) - omega) < 1e-4);
  CHECK(std::abs(post.belief.mean(2) - force) < 1e-4);
}

TEST_CASE("ukf_update equals the textbook linear update") {
  const plant::PlantParams p;
  const auto meas = MeasurementModel::from(p);
  const GaussianBelief b = some_belief();
  const sensors::NoiseSpec noise;
  for (bool with_force : {true, false}) {
    const auto frame = frame_at(-0.2, 1.5, with_force ? std::optional<double>(720.0) : std::nullopt);
    const Eigen::MatrixXd r = sensors::noise_covariance(noise, meas.mask(frame));
    const auto post = ukf_update(b, frame, r, meas, UkfParams{});
    const auto oracle =
        oracle_step(b, StateMatrix::Identity(), StateMatrix::Zero(), &frame, r, p.mass, p.gravity);
    CHECK(rel_diff(post.belief.mean, oracle.mean) < 1e-8);
    CHECK(rel_diff(post.belief.cov, oracle.cov) < 1e-8);
    CHECK(post.innovation.size() == (with_force ? 3 : 2));

    const auto linear = kf_update(b, frame, r, meas);
    CHECK(rel_diff(linear.belief.mean, oracle.mean) < 1e-8);
    CHECK(rel_diff(linear.belief.cov, oracle.cov) < 1e-8);
  }
}

TEST_CASE("updates reject mismatched or singular R") {
  const plant::PlantParams p;
  const auto meas = MeasurementModel::from(p);
  const GaussianBelief b = some_belief();
  const auto frame = frame_at(0, 0, std::nullopt);
  CHECK_THROWS_AS(ukf_update(b, frame, Eigen::MatrixXd::Identity(3, 3), meas, UkfParams{}),
                  DimensionMismatch);
  CHECK_THROWS_AS(kf_update(b, frame, Eigen::MatrixXd::Identity(3, 3), meas), DimensionMismatch);

  GaussianBelief exact;
  exact.cov.setZero();
  const auto full = frame_at(0, 0, 600.0);
  try {
    kf_update(exact, full, Eigen::MatrixXd::Zero(3, 3), meas);
    FAIL("expected SingularInnovation");
  } catch (const SingularInnovation& e) {
    CHECK(!(e.condition_number() < 1e15));
  }
  CHECK_THROWS_AS(ukf_update(exact, full, Eigen::MatrixXd::Zero(3, 3), meas, UkfParams{}),
                  SingularInnovation);
}

TEST_CASE("UKF matches an independent linear KF over 10000 steps") {
  const auto p = soft_plant();
  const auto model = ProcessModel::make(p, 1e-10, 1e-8, 25.0);
  const auto meas = MeasurementModel::from(p);
  const sensors::NoiseSpec noise;
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 8, plant::PlantParams{}, 4);
  const auto levers = soft_levers(truth.r_cop);
  auto frames = sensors::corrupt_trace(truth, noise, sensors::PhaseIntervalSet({{0.1, 0.3}}));
  frames.resize(10000);

  GaussianBelief ukf = some_belief();
  GaussianBelief oracle = ukf;
  UnscentedKalmanFilter filter(model, meas, noise);
  filter.reset(ukf);
  RunDiff mean_diff;
  double worst_cov = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double r = i == 0 ? 0.0 : levers[i - 1];
    if (i > 0) filter.predict(r);
    filter.update(frames[i]);
    const StateMatrix phi = i == 0 ? StateMatrix::Identity() : rk4_transition_oracle(p, r);
    const StateMatrix q = i == 0 ? StateMatrix::Zero() : model.q;
    oracle = oracle_step(oracle, phi, q, &frames[i],
                         sensors::noise_covariance(noise, meas.mask(frames[i])), p.mass, p.gravity);
    mean_diff.add(filter.belief().mean, oracle.mean);
    worst_cov = std::max(worst_cov, rel_diff(filter.belief().cov, oracle.cov));
  }
  CHECK(mean_diff.worst() < 1e-8);
  CHECK(worst_cov < 1e-8);
}

TEST_CASE("KF with exact initial state and no noise tracks the plant") {
  const auto p = soft_plant();
  const auto model = ProcessModel::make(p, 0, 0, 0);
  const auto meas = MeasurementModel::from(p);
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 1, plant::PlantParams{}, 2);
  const auto levers = soft_levers(truth.r_cop);
  GaussianBelief b;
  b.mean << 0.0, 0.0, truth.f_grf[0];
  b.cov.setZero();

  // Truth: the same held-force plant integrated with 100 RK4 substeps.
  plant::PlantParams fine = p;
  fine.dt = p.dt / 100;
  plant::JointState x{0, 0};
  const double force = truth.f_grf[0];
  double worst = 0;
  for (std::size_t i = 1; i < 1000; ++i) {
    const double r = levers[i - 1];
    for (int k = 0; k < 100; ++k) x = plant::step(x, r * force, fine);
    sensors::SensorFrame f = frame_at(x.theta_dot, force / p.mass - p.gravity, force);
    b = kf_step(b, f, r, model, meas,
                sensors::noise_covariance(sensors::NoiseSpec{}, {true, true, true}))
            .belief;
    worst = std::max({worst, std::abs(b.mean(0) - x.theta), std::abs(b.mean(1) - x.theta_dot)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("KF covariance converges to the Riccati fixed point") {
  const auto model = ProcessModel::make(plant::PlantParams{}, 1e-12, 1e-10, 25.0);
  const auto meas = MeasurementModel::from(model.plant);
  const Eigen::MatrixXd r = sensors::noise_covariance(sensors::NoiseSpec{}, {true, true, true});
  const auto frame = frame_at(0, 0, 686.7);
  GaussianBelief b;
  b.cov = Eigen::Vector3d(1e-2, 1.0, 1e4).asDiagonal();
  double delta = 1;
  for (int i = 0; i < 20000; ++i) {
    const StateMatrix before = b.cov;
    b = kf_step(b, frame, 0.05, model, meas, r).belief;
    delta = (b.cov - before).norm();
  }
  CHECK(delta < 1e-10);
}

TEST_CASE("KF, EKF and UKF agree on the linear model") {
  const auto p = soft_plant();
  const auto model = ProcessModel::make(p, 1e-10, 1e-8, 25.0);
  const auto meas = MeasurementModel::from(p);
  const sensors::NoiseSpec noise;
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 1, plant::PlantParams{}, 8);
  const auto frames = sensors::corrupt_trace(truth, noise);
  const auto levers = soft_levers(truth.r_cop);

  LinearKalmanFilter kf(model, meas, noise);
  ExtendedKalmanFilter ekf(model, meas, noise);
  UnscentedKalmanFilter ukf(model, meas, noise);
  const GaussianBelief init = some_belief();
  const auto a = run_filter(kf, frames, levers, init);
  const auto b = run_filter(ekf, frames, levers, init);
  const auto c = run_filter(ukf, frames, levers, init);
  RunDiff kf_ekf, kf_ukf, ekf_ukf;
  for (std::size_t i = 0; i < a.size(); ++i) {
    kf_ekf.add(b.mean[i], a.mean[i]);
    kf_ukf.add(c.mean[i], a.mean[i]);
    ekf_ukf.add(c.mean[i], b.mean[i]);
  }
  CHECK(kf_ekf.worst() < 1e-8);
  CHECK(kf_ukf.worst() < 1e-8);
  CHECK(ekf_ukf.worst() < 1e-8);
}

TEST_CASE("EKF Jacobian matches central finite differences") {
  const auto model = ProcessModel::make(plant::PlantParams{}, 0, 0, 0);
  Rng rng(77);
  const double eps = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector x(rng.uniform(-0.3, 0.3), rng.uniform(-3, 3), rng.uniform(0, 1500));
    const double r = rng.uniform(-0.05, 0.15);
    const auto lin = transition_with_jacobian(x, r, model);
    CHECK((lin.value - transition(x, r, model)).cwiseAbs().maxCoeff() == 0.0);
    StateMatrix fd;
    for (int j = 0; j < 3; ++j) {
      StateVector up = x, down = x;
      const double h = eps * std::max(1.0, std::abs(x(j)));
      up(j) += h;
      down(j) -= h;
      fd.col(j) = (transition(up, r, model) - transition(down, r, model)) / (2 * h);
    }
    const double rel = (lin.jacobian - fd).norm() / lin.jacobian.norm();
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("filters are deterministic") {
  const plant::PlantParams p;
  const auto model = ProcessModel::make(p, 1e-12, 1e-10, 25.0);
  const auto meas = MeasurementModel::from(p);
  sensors::NoiseSpec noise;
  noise.seed = 12;
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 1, p, 8);
  const auto frames = sensors::corrupt_trace(truth, noise, sensors::PhaseIntervalSet({{0.5, 0.7}}));
  std::vector<std::unique_ptr<Estimator>> make;
  for (int rep = 0; rep < 2; ++rep) {
    make.push_back(std::make_unique<ExtendedKalmanFilter>(model, meas, noise));
    make.push_back(std::make_unique<UnscentedKalmanFilter>(model, meas, noise));
  }
  GaussianBelief init;
  init.mean << 0, 0, truth.f_grf[0];
  const auto e1 = run_filter(*make[0], frames, truth.r_cop, init);
  const auto e2 = run_filter(*make[2], frames, truth.r_cop, init);
  const auto u1 = run_filter(*make[1], frames, truth.r_cop, init);
  const auto u2 = run_filter(*make[3], frames, truth.r_cop, init);
  CHECK(e1.mean == e2.mean);
  CHECK(u1.mean == u2.mean);
  CHECK(u1.nis == u2.nis);
}

TEST_CASE("NIS is consistent on a correctly specified model") {
  const plant::PlantParams p;
  const auto model = ProcessModel::make(p, 1e-8, 1e-4, 25.0);
  const auto meas = MeasurementModel::from(p);
  const sensors::NoiseSpec noise;
  UnscentedKalmanFilter filter(model, meas, noise);

  Rng rng(2026);
  StateVector x(0.0, 0.0, 686.7);
  GaussianBelief init;
  init.mean = x;
  init.cov = model.q;
  init.cov(2, 2) = 100;
  filter.reset(init);
  const std::size_t steps = 8000;
  double total = 0;
  int dims = 0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double r = 0.05 + 0.05 * std::sin(static_cast<double>(i) * 1e-3 * 2 * M_PI);
    if (i > 0) {
      x = transition(x, r, model);
      for (int j = 0; j < 3; ++j) x(j) += std::sqrt(model.q(j, j)) * rng.normal();
      filter.predict(r);
    }
    sensors::SensorFrame f;
    f.omega = x(1) + noise.sigma_gyro * rng.normal();
    f.z_ddot_meas = x(2) / p.mass - p.gravity + noise.sigma_accel * rng.normal();
    if (i % 3 != 0) f.f_z_meas = x(2) + noise.sigma_force * rng.normal();
    const auto c = filter.update(f);
    total += c.nis();
    dims += c.mask.count();
  }
  const double ratio = total / dims;
  CHECK(ratio > 0.7);
  CHECK(ratio < 1.3);
}

TEST_CASE("filtering beats the raw measurements on default walking") {
  const plant::PlantParams p;
  const auto model = ProcessModel::make(p, 1e-12, 1e-10, 25.0);
  const auto meas = MeasurementModel::from(p);
  sensors::NoiseSpec noise;
  noise.seed = 5;
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 5, p, 5);
  const auto frames = sensors::corrupt_trace(truth, noise);
  UnscentedKalmanFilter ukf(model, meas, noise);
  GaussianBelief init;
  init.mean << 0, 0, *frames[0].f_z_meas;
  init.cov = Eigen::Vector3d(1e-6, 1e-4, 100).asDiagonal();
  const auto tr = run_filter(ukf, frames, truth.r_cop, init);

  double theta_raw = 0, theta_f = 0, f_raw = 0, f_f = 0, integrated = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) integrated += frames[i - 1].omega * p.dt;
    theta_raw += std::pow(integrated - truth.theta[i], 2);
    theta_f += std::pow(tr.mean[i](0) - truth.theta[i], 2);
    f_raw += std::pow(*frames[i].f_z_meas - truth.f_grf[i], 2);
    f_f += std::pow(tr.mean[i](2) - truth.f_grf[i], 2);
    CHECK(tr.nis[i] >= 0.0);
  }
  CHECK(theta_f < theta_raw);
  CHECK(f_f < f_raw);
}

TEST_CASE("covariance stays healthy through a long dropout") {
  const plant::PlantParams p;
  const auto model = ProcessModel::make(p, 1e-12, 1e-10, 25.0);
  const auto meas = MeasurementModel::from(p, false);
  const sensors::NoiseSpec noise;
  const auto truth = plant::generate_gait(plant::walking_profile(2.0), 2, p, 1);
  const auto frames = sensors::corrupt_trace(truth, noise, sensors::PhaseIntervalSet({{0.0, 0.6}}));
  UnscentedKalmanFilter ukf(model, meas, noise);
  GaussianBelief init;
  init.mean << 0, 0, 700;
  ukf.reset(init);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) ukf.predict(truth.r_cop[i - 1]);
    const auto c = ukf.update(frames[i]);
    CHECK(c.innovation.size() == c.mask.count());
    const auto& cov = ukf.belief().cov;
    REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE_NOTHROW(robust_cholesky(cov));
  }
}

TEST_CASE("filter trace CSV") {
  FilterTrace tr;
  tr.t = {0.0, 0.001};
  tr.mean = {StateVector(0.1, 0.2, 300), StateVector(0.11, 0.21, 301)};
  tr.cov_diag = {StateVector(1, 2, 3), StateVector(4, 5, 6)};
  tr.nis = {1, 2};
  tr.measurement_dim = {3, 3};
  CHECK(tr.component(2) == std::vector<double>{300, 301});
  const auto path = std::filesystem::temp_directory_path() / "prosthestim_filter_trace.csv";
  write_filter_trace_csv(tr, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,theta_hat,theta_dot_hat,f_z_hat,p11,p22,p33");
  std::string first;
  std::getline(in, first);
  CHECK(first == "0,0.1,0.2,300,1,2,3");
  std::filesystem::remove(path);
}
