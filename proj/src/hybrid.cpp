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

#include "prosthestim/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "prosthestim/csv.hpp"
#include "prosthestim/error.hpp"

namespace prosthestim::hybrid {

using filters::GaussianBelief;
using filters::kForce;
using filters::kTheta;

void Bounds::validate() const {
  if (!std::isfinite(theta_min) || !std::isfinite(theta_max) || !(theta_min < theta_max))
    throw InvalidArgument(
        fmt::format("hybrid.bounds needs theta_min < theta_max, got [{}, {}]", theta_min, theta_max));
  if (!std::isfinite(f_min)) throw InvalidArgument("hybrid.bounds.f_min must be finite");
}

void HybridConfig::validate() const {
  bounds.validate();
  if (!(lstm_inflation >= 1))
    throw InvalidArgument(
        fmt::format("hybrid.lstm_inflation must be >= 1, got {}", lstm_inflation));
  if (!(half_life > 0))
    throw InvalidArgument(fmt::format("hybrid.half_life must be > 0, got {}", half_life));
  if (!(adapt_gain > 0))
    throw InvalidArgument(fmt::format("hybrid.adapt_gain must be > 0, got {}", adapt_gain));
  if (!(scale_min > 0 && scale_min <= 1 && scale_max >= 1 && std::isfinite(scale_max)))
    throw InvalidArgument(fmt::format(
        "hybrid scale clamp needs 0 < scale_min <= 1 <= scale_max, got [{}, {}]", scale_min,
        scale_max));
}

std::string_view to_string(ForceSource source) {
  switch (source) {
    case ForceSource::plate:
      return "plate";
    case ForceSource::lstm:
      return "lstm";
    case ForceSource::none:
      return "none";
  }
  return "none";
}

AugmentedMeasurement augment_measurement(const sensors::SensorFrame& frame,
                                         std::optional<double> lstm_force,
                                         const sensors::NoiseSpec& noise,
                                         const filters::MeasurementModel& measurement,
                                         const HybridConfig& config) {
  AugmentedMeasurement out;
  out.frame = frame;
  if (frame.f_z_meas) {
    out.source = ForceSource::plate;
  } else if (config.augment && lstm_force && std::isfinite(*lstm_force)) {
    out.source = ForceSource::lstm;
    out.frame.f_z_meas = *lstm_force;
  } else {
    out.source = ForceSource::none;
  }
  out.r = sensors::noise_covariance(noise, measurement.mask(out.frame));
  if (out.source == ForceSource::lstm) {
    const Eigen::Index last = out.r.rows() - 1;
    out.r(last, last) *= config.lstm_inflation;
  }
  return out;
}

ResidualStats::ResidualStats(double half_life) {
  if (!(half_life > 0))
    throw InvalidArgument(fmt::format("half-life must be > 0, got {}", half_life));
  decay_ = std::exp2(-1.0 / half_life);
}

void ResidualStats::add(double residual_sq, double expected) {
  if (!std::isfinite(residual_sq) || !(expected > 0) || !std::isfinite(expected)) return;
  if (count_ == 0) {
    residual_ = residual_sq;
    expected_ = expected;
  } else {
    residual_ = decay_ * residual_ + (1 - decay_) * residual_sq;
    expected_ = decay_ * expected_ + (1 - decay_) * expected;
  }
  ++count_;
}

double ResidualStats::ratio() const { return count_ == 0 ? 1.0 : residual_ / expected_; }

double clamped_scale(double ratio, const HybridConfig& config) {
  return std::clamp(1.0 + config.adapt_gain * (ratio - 1.0), config.scale_min, config.scale_max);
}

AdaptedNoise adapt_noise(const NoiseStatistics& stats, const AugmentedMeasurement& measurement,
                         const filters::MeasurementModel& model, const filters::StateMatrix& base_q,
                         const HybridConfig& config) {
  AdaptedNoise out{measurement.r, base_q, {}};
  if (config.adapt_noise) {
    if (config.adapt_inertial) {
      out.scales.gyro = clamped_scale(stats.gyro.ratio(), config);
      out.scales.accel = clamped_scale(stats.accel.ratio(), config);
    }
    out.scales.force = clamped_scale(stats.force.ratio(), config);
    Eigen::Index k = 0;
    out.r(k, k) *= out.scales.gyro;
    ++k;
    if (model.fuse_accel) {
      out.r(k, k) *= out.scales.accel;
      ++k;
    }
    if (measurement.source == ForceSource::lstm) out.r(k, k) *= out.scales.force;
  }
  if (config.adapt_process) {
    out.scales.process = clamped_scale(stats.process.ratio(), config);
    out.q *= out.scales.process;
  }
  return out;
}

BoundedBelief enforce_bounds(const GaussianBelief& belief, const Bounds& bounds) {
  BoundedBelief out{belief, 0};
  auto clamp_to = [&](int index, double lo, double hi) {
    const double v = out.belief.mean(index);
    const double c = std::clamp(v, lo, hi);
    if (c != v) {
      const double d = c - v;
      out.belief.mean(index) = c;
      out.belief.cov(index, index) += d * d;
      ++out.hits;
    }
  };
  clamp_to(kTheta, bounds.theta_min, bounds.theta_max);
  clamp_to(kForce, bounds.f_min, std::numeric_limits<double>::infinity());
  return out;
}

void HybridContext::validate() const {
  process.validate();
  noise.validate();
  ukf.validate(filters::kStateDim);
  config.validate();
}

HybridStepResult hybrid_step(const GaussianBelief& belief, const sensors::SensorFrame& frame,
                             double r_cop_prev, std::optional<LstmPrediction> lstm,
                             NoiseStatistics& stats, const HybridContext& context, bool predict,
                             std::size_t step_index) {
  const HybridConfig& cfg = context.config;
  const std::optional<double> lstm_force =
      lstm ? std::optional<double>(lstm->f_z) : std::nullopt;
  const AugmentedMeasurement aug =
      augment_measurement(frame, lstm_force, context.noise, context.measurement, cfg);
  const AdaptedNoise noise = adapt_noise(stats, aug, context.measurement, context.process.q, cfg);

  GaussianBelief prior = belief;
  if (predict) {
    filters::ProcessModel process = context.process;
    process.q = noise.q;
    prior = filters::ukf_predict(belief, r_cop_prev, process, context.ukf, step_index);
  }
  HybridStepResult out;
  out.correction = filters::ukf_update(prior, aug.frame, noise.r, context.measurement, context.ukf);
  out.source = aug.source;
  out.lstm_available = lstm_force.has_value();
  out.scales = noise.scales;

  const auto& nu = out.correction.innovation;
  const auto& s = out.correction.innovation_cov;
  Eigen::Index k = 0;
  stats.gyro.add(nu(k) * nu(k), s(k, k));
  ++k;
  if (context.measurement.fuse_accel) stats.accel.add(nu(k) * nu(k), s(k, k));
  if (aug.source == ForceSource::plate && lstm_force && std::isfinite(*lstm_force)) {
    const double e = *frame.f_z_meas - *lstm_force;
    const double var = context.noise.sigma_force * context.noise.sigma_force;
    stats.force.add(e * e, (1 + cfg.lstm_inflation) * var);
  }
  if (nu.size() > 0)
    stats.process.add(out.correction.nis(), static_cast<double>(nu.size()));

  if (cfg.enforce_bounds) {
    const BoundedBelief b = enforce_bounds(out.correction.belief, cfg.bounds);
    out.belief = b.belief;
    out.bound_hits = b.hits;
    if (b.hits > 0) spdlog::debug("t={}: posterior projected onto bounds", frame.t);
  } else {
    out.belief = out.correction.belief;
  }
  return out;
}

StreamingPredictor::StreamingPredictor(std::shared_ptr<const neural::Model> model,
                                       plant::PlantParams plant)
    : model_(std::move(model)), plant_(plant) {
  if (!model_) throw InvalidArgument("StreamingPredictor needs a model");
  features_ = parse_features(model_->input_names);
  const auto& targets = model_->target_names;
  const auto row_of = [&](std::string_view name) {
    const auto it = std::find(targets.begin(), targets.end(), name);
    if (it == targets.end())
      throw InvalidArgument(fmt::format("model has no '{}' output", name));
    return static_cast<Eigen::Index>(it - targets.begin());
  };
  theta_row_ = row_of(kThetaTarget);
  force_row_ = row_of(kForceTarget);
  capacity_ = static_cast<std::size_t>(neural::first_predictable(model_->config()));
}

std::optional<LstmPrediction> StreamingPredictor::predict() {
  if (history_.size() < capacity_) return std::nullopt;
  const auto& c = model_->config();
  Eigen::MatrixXd window(c.input_channels, c.window_length);
  for (int k = 0; k < c.window_length; ++k)
    window.col(k) = history_[static_cast<std::size_t>(k * c.decimation)];
  const Eigen::VectorXd y = model_->predict_window(window);
  return LstmPrediction{y(theta_row_), y(force_row_)};
}

void StreamingPredictor::observe(const sensors::SensorFrame& frame, double r_cop) {
  history_.push_back(feature_vector(features_, frame, r_cop, plant_));
  if (history_.size() > capacity_) history_.pop_front();
}

PrecomputedPredictor::PrecomputedPredictor(Eigen::MatrixXd predictions)
    : predictions_(std::move(predictions)) {
  if (predictions_.rows() != 2)
    throw DimensionMismatch(
        fmt::format("precomputed predictions need 2 rows, got {}", predictions_.rows()));
}

std::optional<LstmPrediction> PrecomputedPredictor::predict() {
  if (next_ >= predictions_.cols()) return std::nullopt;
  const double theta = predictions_(0, next_);
  const double f = predictions_(1, next_);
  if (!std::isfinite(theta) || !std::isfinite(f)) return std::nullopt;
  return LstmPrediction{theta, f};
}

Eigen::MatrixXd predict_trial(const neural::Model& model,
                              const std::vector<sensors::SensorFrame>& frames,
                              const std::vector<double>& r_cop, const plant::PlantParams& plant) {
  const Eigen::MatrixXd y =
      model.predict_series(feature_matrix(parse_features(model.input_names), frames, r_cop, plant));
  Eigen::MatrixXd out(2, y.cols());
  const auto& targets = model.target_names;
  for (int k = 0; k < 2; ++k) {
    const std::string_view name = k == 0 ? kThetaTarget : kForceTarget;
    const auto it = std::find(targets.begin(), targets.end(), name);
    if (it == targets.end()) throw InvalidArgument(fmt::format("model has no '{}' output", name));
    out.row(k) = y.row(it - targets.begin());
  }
  return out;
}

double HybridTrace::lstm_source_fraction() const {
  std::size_t absent = 0, filled = 0;
  bool started = false;
  for (std::size_t i = 0; i < source.size(); ++i) {
    started = started || predicted[i];
    if (!started || source[i] == ForceSource::plate) continue;
    ++absent;
    if (source[i] == ForceSource::lstm) ++filled;
  }
  return absent == 0 ? 1.0 : static_cast<double>(filled) / static_cast<double>(absent);
}

int HybridTrace::total_bound_hits() const {
  int n = 0;
  for (int h : bound_hits) n += h;
  return n;
}

HybridEstimator::HybridEstimator(HybridContext context, std::unique_ptr<LstmPredictor> predictor)
    : context_(std::move(context)),
      predictor_(std::move(predictor)),
      stats_(context_.config.half_life) {
  context_.validate();
}

void HybridEstimator::reset(const GaussianBelief& initial) {
  filters::check_health(initial);
  belief_ = initial;
  stats_ = NoiseStatistics(context_.config.half_life);
  steps_ = 0;
  warm_started_ = false;
  if (predictor_) predictor_->reset();
}

HybridStepResult HybridEstimator::step(const sensors::SensorFrame& frame, double r_cop_prev,
                                       double r_cop_now) {
  const std::optional<LstmPrediction> lstm =
      predictor_ ? predictor_->predict() : std::optional<LstmPrediction>();
  if (lstm && context_.config.warm_start && !warm_started_) {
    belief_.mean(kTheta) = lstm->theta;
    belief_.mean(kForce) = lstm->f_z;
    warm_started_ = true;
  }
  HybridStepResult r =
      hybrid_step(belief_, frame, r_cop_prev, lstm, stats_, context_, steps_ > 0, steps_);
  if (predictor_) predictor_->observe(frame, r_cop_now);
  belief_ = context_.config.propagate_bounds ? r.belief : r.correction.belief;
  ++steps_;
  return r;
}

HybridTrace run_hybrid(HybridEstimator& estimator, const std::vector<sensors::SensorFrame>& frames,
                       const std::vector<double>& r_cop, const GaussianBelief& initial) {
  if (r_cop.size() != frames.size())
    throw DimensionMismatch("run_hybrid: lever-arm series and frame stream differ in length");
  estimator.reset(initial);
  HybridTrace trace;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const HybridStepResult r = estimator.step(frames[i], i > 0 ? r_cop[i - 1] : r_cop[0], r_cop[i]);
    trace.filter.t.push_back(frames[i].t);
    trace.filter.mean.push_back(r.belief.mean);
    trace.filter.cov_diag.push_back(r.belief.cov.diagonal());
    trace.filter.nis.push_back(r.correction.nis());
    trace.filter.measurement_dim.push_back(static_cast<int>(r.correction.innovation.size()));
    trace.source.push_back(r.source);
    trace.scales.push_back(r.scales);
    trace.bound_hits.push_back(r.bound_hits);
    trace.predicted.push_back(r.lstm_available);
  }
  return trace;
}

void write_hybrid_trace_csv(const HybridTrace& trace, const std::filesystem::path& path) {
  csv::Writer out(path, {"t", "theta_hat", "theta_dot_hat", "f_z_hat", "p11", "p22", "p33",
                         "f_z_source", "r_scale_gyro", "r_scale_force", "bound_hits"});
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& m = trace.filter.mean[i];
    const auto& p = trace.filter.cov_diag[i];
    std::vector<std::string> cells;
    for (double v : {trace.filter.t[i], m(0), m(1), m(2), p(0), p(1), p(2)})
      cells.push_back(csv::format_number(v));
    cells.emplace_back(to_string(trace.source[i]));
    cells.push_back(csv::format_number(trace.scales[i].gyro));
    cells.push_back(csv::format_number(trace.scales[i].force));
    cells.push_back(std::to_string(trace.bound_hits[i]));
    out.row(cells);
  }
}

}  // namespace prosthestim::hybrid
