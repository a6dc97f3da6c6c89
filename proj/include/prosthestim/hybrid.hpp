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
#include <deque>
#include <filesystem>
#include <memory>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "prosthestim/estimator.hpp"
#include "prosthestim/features.hpp"
#include "prosthestim/model.hpp"
#include "prosthestim/ukf.hpp"

namespace prosthestim::hybrid {

/// Feasible box for the posterior mean.
struct Bounds {
  double theta_min = -std::numbers::pi / 2;
  double theta_max = std::numbers::pi / 2;
  double f_min = 0.0;

  void validate() const;
};

struct HybridConfig {
  /// Substitute the LSTM force when the plate reading is missing.
  bool augment = true;
  /// Rescale R of a substituted force from the plate - LSTM residuals.
  bool adapt_noise = true;
  /// Also rescale the gyro and accelerometer R from their own innovations.
  /// Off by default: model lag at heel strike shows up in these innovations
  /// and inflating R for it slows the filter down exactly when it should
  /// follow the measurements.
  bool adapt_inertial = false;
  /// Rescale Q from the normalised innovation.
  bool adapt_process = true;
  bool enforce_bounds = true;
  Bounds bounds;
  /// Carry the bounded belief into the next step. When false the reported
  /// posterior is bounded but the filter keeps its unconstrained belief, so a
  /// clamp in swing does not bias the following steps.
  bool propagate_bounds = false;
  /// Variance of a substituted force is this many times the plate variance.
  double lstm_inflation = 4.0;
  double half_life = 50.0;  // steps
  /// scale = clamp(1 + gain (ratio - 1), scale_min, scale_max).
  double adapt_gain = 1.0;
  double scale_min = 0.25;
  double scale_max = 4.0;
  /// Move the mean (theta, f_z) onto the first available LSTM prediction.
  bool warm_start = false;

  void validate() const;
};

enum class ForceSource { plate, lstm, none };
std::string_view to_string(ForceSource source);

/// Frame handed to the filter update and the covariance that goes with it.
struct AugmentedMeasurement {
  sensors::SensorFrame frame;
  ForceSource source = ForceSource::plate;
  Eigen::MatrixXd r;  // over the channels present in `frame`, order gyro, accel, force
};

/// A present plate reading passes through. A missing one is replaced by
/// `lstm_force` with R inflated by config.lstm_inflation; without a prediction
/// (cold start) the channel stays absent for this step.
AugmentedMeasurement augment_measurement(const sensors::SensorFrame& frame,
                                         std::optional<double> lstm_force,
                                         const sensors::NoiseSpec& noise,
                                         const filters::MeasurementModel& measurement,
                                         const HybridConfig& config);

/// Exponentially weighted means of squared residuals and of their expected
/// values. The first sample initialises both.
class ResidualStats {
public:
  explicit ResidualStats(double half_life = 50.0);

  void add(double residual_sq, double expected);
  bool empty() const noexcept { return count_ == 0; }
  std::size_t count() const noexcept { return count_; }
  /// EWMA(residual^2) / EWMA(expected); 1 while empty.
  double ratio() const;

private:
  double decay_;
  double residual_ = 0.0;
  double expected_ = 0.0;
  std::size_t count_ = 0;
};

/// Residual trackers of one estimator run.
///   gyro, accel  innovation squared against its predicted variance
///   force        (plate - LSTM)^2 against (1 + inflation) sigma_force^2
///   process      NIS against the measurement dimension
struct NoiseStatistics {
  ResidualStats gyro, accel, force, process;

  explicit NoiseStatistics(double half_life = 50.0)
      : gyro(half_life), accel(half_life), force(half_life), process(half_life) {}
};

struct NoiseScales {
  double gyro = 1.0;
  double accel = 1.0;
  double force = 1.0;
  double process = 1.0;
};

/// clamp(1 + gain (ratio - 1), scale_min, scale_max).
double clamped_scale(double ratio, const HybridConfig& config);

struct AdaptedNoise {
  Eigen::MatrixXd r;
  filters::StateMatrix q;
  NoiseScales scales;
};

/// Scales the diagonal of `base_r` channel by channel. The force scale applies
/// only to a substituted LSTM value; a plate reading keeps its own variance.
/// Gyro and accelerometer scales stay 1 unless config.adapt_inertial is set.
/// Q is scaled when config.adapt_process is set. Both stay positive definite
/// because every scale is at least scale_min > 0.
AdaptedNoise adapt_noise(const NoiseStatistics& stats, const AugmentedMeasurement& measurement,
                         const filters::MeasurementModel& model, const filters::StateMatrix& base_q,
                         const HybridConfig& config);

struct BoundedBelief {
  filters::GaussianBelief belief;
  int hits = 0;
};

/// Clamps the mean into the box and adds the squared clamp distance to the
/// diagonal variance of every clamped coordinate.
BoundedBelief enforce_bounds(const filters::GaussianBelief& belief, const Bounds& bounds);

/// Fixed ingredients of a hybrid run.
struct HybridContext {
  filters::ProcessModel process;
  filters::MeasurementModel measurement;
  sensors::NoiseSpec noise;
  filters::UkfParams ukf;
  HybridConfig config;

  void validate() const;
};

/// LSTM output for one sample.
struct LstmPrediction {
  double theta = 0.0;
  double f_z = 0.0;
};

struct HybridStepResult {
  filters::GaussianBelief belief;  // after bounds
  filters::Correction correction;  // before bounds
  ForceSource source = ForceSource::plate;
  NoiseScales scales;
  int bound_hits = 0;
  bool lstm_available = false;
};

/// augment -> adapt -> ukf_predict -> ukf_update -> enforce_bounds. The
/// prediction is skipped when `predict` is false (first frame of a run).
/// `stats` is read for the scales and then updated with this step's residuals.
HybridStepResult hybrid_step(const filters::GaussianBelief& belief,
                             const sensors::SensorFrame& frame, double r_cop_prev,
                             std::optional<LstmPrediction> lstm, NoiseStatistics& stats,
                             const HybridContext& context, bool predict = true,
                             std::size_t step_index = 0);

/// Supplies the LSTM prediction for the next frame from the frames seen so far.
class LstmPredictor {
public:
  virtual ~LstmPredictor() = default;
  virtual void reset() = 0;
  /// Prediction for the frame about to be processed, nullopt until enough
  /// history has been observed.
  virtual std::optional<LstmPrediction> predict() = 0;
  /// Records the frame just processed and its lever arm.
  virtual void observe(const sensors::SensorFrame& frame, double r_cop) = 0;
};

/// Runs the model on a trailing window of features kept in a ring buffer of
/// window_length * decimation samples.
class StreamingPredictor final : public LstmPredictor {
public:
  StreamingPredictor(std::shared_ptr<const neural::Model> model, plant::PlantParams plant);

  void reset() override { history_.clear(); }
  std::optional<LstmPrediction> predict() override;
  void observe(const sensors::SensorFrame& frame, double r_cop) override;
  std::size_t history_size() const noexcept { return history_.size(); }

private:
  std::shared_ptr<const neural::Model> model_;
  plant::PlantParams plant_;
  std::vector<Feature> features_;
  Eigen::Index theta_row_ = 0;
  Eigen::Index force_row_ = 1;
  std::size_t capacity_ = 0;
  std::deque<Eigen::VectorXd> history_;
};

/// Replays a 2 x N matrix of (theta, f_z) predictions; NaN columns count as
/// unavailable.
class PrecomputedPredictor final : public LstmPredictor {
public:
  explicit PrecomputedPredictor(Eigen::MatrixXd predictions);

  void reset() override { next_ = 0; }
  std::optional<LstmPrediction> predict() override;
  void observe(const sensors::SensorFrame&, double) override { ++next_; }

private:
  Eigen::MatrixXd predictions_;
  Eigen::Index next_ = 0;
};

/// Rows (theta, f_z) of the model's batched predictions over a whole trial.
Eigen::MatrixXd predict_trial(const neural::Model& model,
                              const std::vector<sensors::SensorFrame>& frames,
                              const std::vector<double>& r_cop, const plant::PlantParams& plant);

struct HybridTrace {
  filters::FilterTrace filter;
  std::vector<ForceSource> source;
  std::vector<NoiseScales> scales;
  std::vector<int> bound_hits;
  std::vector<bool> predicted;  // an LSTM prediction existed for the frame

  std::size_t size() const noexcept { return filter.size(); }
  /// Share of force-absent frames filled by the LSTM, counted from the first
  /// frame with a prediction. 1 when no such frame exists.
  double lstm_source_fraction() const;
  int total_bound_hits() const;
};

/// Single-owner hybrid estimator over a frame stream.
class HybridEstimator {
public:
  HybridEstimator(HybridContext context, std::unique_ptr<LstmPredictor> predictor);

  void reset(const filters::GaussianBelief& initial);
  /// Processes the next frame. `r_cop_prev` is the lever arm over the interval
  /// ending at this frame; it is ignored for the first frame.
  HybridStepResult step(const sensors::SensorFrame& frame, double r_cop_prev,
                        double r_cop_now);
  const filters::GaussianBelief& belief() const noexcept { return belief_; }
  const HybridContext& context() const noexcept { return context_; }

private:
  HybridContext context_;
  std::unique_ptr<LstmPredictor> predictor_;
  filters::GaussianBelief belief_;
  NoiseStatistics stats_;
  std::size_t steps_ = 0;
  bool warm_started_ = false;
};

HybridTrace run_hybrid(HybridEstimator& estimator, const std::vector<sensors::SensorFrame>& frames,
                       const std::vector<double>& r_cop, const filters::GaussianBelief& initial);

/// Filter trace columns plus f_z_source,r_scale_gyro,r_scale_force,bound_hits.
void write_hybrid_trace_csv(const HybridTrace& trace, const std::filesystem::path& path);

}  // namespace prosthestim::hybrid
