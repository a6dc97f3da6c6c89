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

#include "prosthestim/ukf.hpp"

#include <cmath>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::filters {

void UkfParams::validate(int n) const {
  if (!(alpha > 0 && alpha <= 1))
    throw InvalidArgument(fmt::format("ukf.alpha must lie in (0, 1], got {}", alpha));
  if (!(beta >= 0)) throw InvalidArgument(fmt::format("ukf.beta must be >= 0, got {}", beta));
  if (!(kappa >= 0)) throw InvalidArgument(fmt::format("ukf.kappa must be >= 0, got {}", kappa));
  if (!(n + lambda(n) > 0))
    throw InvalidArgument(fmt::format("UKF scaling undefined: n + lambda = {}", n + lambda(n)));
}

SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         const UkfParams& params) {
  const int n = static_cast<int>(mean.size());
  if (cov.rows() != n || cov.cols() != n)
    throw DimensionMismatch(fmt::format("sigma_points: mean has {} entries but covariance is {}x{}",
                                        n, cov.rows(), cov.cols()));
  params.validate(n);
  const double lambda = params.lambda(n);
  const double spread = n + lambda;
  const Eigen::MatrixXd s = std::sqrt(spread) * robust_cholesky(cov);

  SigmaPoints sp;
  sp.points.resize(n, 2 * n + 1);
  sp.points.col(0) = mean;
  for (int i = 0; i < n; ++i) {
    sp.points.col(1 + i) = mean + s.col(i);
    sp.points.col(1 + n + i) = mean - s.col(i);
  }
  sp.wm = Eigen::VectorXd::Constant(2 * n + 1, 1.0 / (2.0 * spread));
  sp.wc = sp.wm;
  sp.wm(0) = lambda / spread;
  sp.wc(0) = lambda / spread + (1.0 - params.alpha * params.alpha + params.beta);
  return sp;
}

void unscented_moments(const Eigen::MatrixXd& samples, const SigmaPoints& sigma,
                       Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const Eigen::VectorXd anchor = samples.col(0);
  const Eigen::MatrixXd offsets = samples.colwise() - anchor;
  const Eigen::VectorXd shift = offsets * sigma.wm;  // column 0 contributes zero
  mean = anchor + shift;
  const Eigen::MatrixXd centred = offsets.colwise() - shift;
  cov = centred * sigma.wc.asDiagonal() * centred.transpose();
}

GaussianBelief ukf_predict(const GaussianBelief& belief, double r_cop, const ProcessModel& model,
                           const UkfParams& params, std::size_t step_index) {
  const SigmaPoints sp = sigma_points(belief.mean, belief.cov, params);
  Eigen::MatrixXd propagated(kStateDim, sp.points.cols());
  for (Eigen::Index i = 0; i < sp.points.cols(); ++i)
    propagated.col(i) = transition(sp.points.col(i), r_cop, model, step_index);

  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  unscented_moments(propagated, sp, mean, cov);
  GaussianBelief out;
  out.mean = mean;
  out.cov = symmetrized(cov + model.q);
  check_health(out);
  return out;
}

Correction ukf_update(const GaussianBelief& predicted, const sensors::SensorFrame& frame,
                      const Eigen::MatrixXd& r, const MeasurementModel& measurement,
                      const UkfParams& params) {
  const sensors::ChannelMask mask = measurement.mask(frame);
  const int m = mask.count();
  if (r.rows() != m || r.cols() != m)
    throw DimensionMismatch(fmt::format(
        "measurement covariance is {}x{} but the frame carries {} channels", r.rows(), r.cols(), m));

  const SigmaPoints sp = sigma_points(predicted.mean, predicted.cov, params);
  Eigen::MatrixXd ys(m, sp.points.cols());
  for (Eigen::Index i = 0; i < sp.points.cols(); ++i)
    ys.col(i) = measurement.predict(sp.points.col(i), mask);

  Eigen::VectorXd y_hat;
  Eigen::MatrixXd p_yy;
  unscented_moments(ys, sp, y_hat, p_yy);
  p_yy = symmetrized(p_yy + r);

  Eigen::VectorXd x_hat;
  Eigen::MatrixXd p_xx;
  unscented_moments(sp.points, sp, x_hat, p_xx);
  const Eigen::MatrixXd dx = (sp.points.colwise() - sp.points.col(0)).colwise() -
                             (x_hat - sp.points.col(0));
  const Eigen::MatrixXd dy = (ys.colwise() - ys.col(0)).colwise() - (y_hat - ys.col(0));
  const Eigen::MatrixXd p_xy = dx * sp.wc.asDiagonal() * dy.transpose();

  const auto llt = factor_innovation(p_yy);
  const Eigen::MatrixXd gain = llt.solve(p_xy.transpose()).transpose();
  const Eigen::VectorXd innovation = measurement.observe(frame, mask) - y_hat;

  Correction c;
  c.mask = mask;
  c.innovation = innovation;
  c.innovation_cov = p_yy;
  c.belief.mean = predicted.mean + gain * innovation;
  c.belief.cov = symmetrized(predicted.cov - gain * p_yy * gain.transpose());
  check_health(c.belief);
  return c;
}

UnscentedKalmanFilter::UnscentedKalmanFilter(ProcessModel model, MeasurementModel measurement,
                                             sensors::NoiseSpec noise, UkfParams params)
    : model_(std::move(model)), measurement_(measurement), noise_(noise), params_(params) {
  model_.validate();
  params_.validate(kStateDim);
  noise_.validate();
}

void UnscentedKalmanFilter::reset(const GaussianBelief& initial) {
  check_health(initial);
  belief_ = initial;
  steps_ = 0;
}

void UnscentedKalmanFilter::predict(double r_cop) {
  belief_ = ukf_predict(belief_, r_cop, model_, params_, ++steps_);
}

Correction UnscentedKalmanFilter::update(const sensors::SensorFrame& frame) {
  const auto mask = measurement_.mask(frame);
  Correction c = ukf_update(belief_, frame, sensors::noise_covariance(noise_, mask), measurement_,
                            params_);
  belief_ = c.belief;
  return c;
}

}  // namespace prosthestim::filters
