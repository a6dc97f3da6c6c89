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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prosthestim/dataset.hpp"
#include "prosthestim/gait.hpp"
#include "prosthestim/hybrid.hpp"
#include "prosthestim/lstm.hpp"
#include "prosthestim/training.hpp"
#include "prosthestim/ukf.hpp"

namespace prosthestim::eval {

enum class ModelKind { kf, ekf, ukf, lstm, lstm_ukf };
inline constexpr std::array<ModelKind, 5> kAllModels{ModelKind::kf, ModelKind::ekf, ModelKind::ukf,
                                                     ModelKind::lstm, ModelKind::lstm_ukf};

/// Table label: KF, EKF, UKF, LSTM, LSTM+UKF.
std::string_view to_string(ModelKind model);
/// Lower-case key used in plot files and on the command line: kf, ekf, ukf,
/// lstm, lstm_ukf (hybrid is accepted for lstm_ukf).
std::string_view model_key(ModelKind model);
ModelKind parse_model(std::string_view name);  // accepts label or key

enum class Target { grf, ankle_angle };
inline constexpr std::array<Target, 2> kAllTargets{Target::grf, Target::ankle_angle};
std::string_view to_string(Target target);
Target parse_target(std::string_view name);

/// Diagonal of the per-step process noise shared by every filter.
struct ProcessNoise {
  double theta = 1e-10;     // rad^2
  double theta_dot = 1e-4;  // rad^2/s^2
  double force = 25.0;      // N^2
};

struct BenchmarkConfig {
  std::vector<plant::Task> tasks{plant::Task::walking, plant::Task::sitting,
                                 plant::Task::running};
  std::vector<CaseId> cases{CaseId::IV};
  /// km/h for walking and running; empty means each task's default speed.
  /// Sitting always runs once at speed 0.
  std::vector<double> speeds;
  std::vector<ModelKind> models{kAllModels.begin(), kAllModels.end()};
  int seeds = 5;
  std::uint64_t master_seed = 0;
  int jobs = 1;

  int train_trials = 10;  // the last 20 % of them validate
  int test_trials = 3;
  /// Trial length in seconds, rounded up to whole cycles and at least two.
  /// The first cycle of every test trial is excluded from scoring.
  double trial_duration = 4.0;
  double force_dropout = 0.2;  // fraction of each cycle without the plate
  int dropout_blocks = 2;

  plant::PlantParams plant;
  sensors::NoiseSpec noise;  // seed is replaced per trial
  ProcessNoise process;
  filters::UkfParams ukf;
  bool fuse_accel = true;
  /// Per-task shape overrides. Speed and cycle duration still follow the cell.
  std::map<plant::Task, plant::GaitProfile> gait;
  neural::NetworkConfig network = default_network();
  neural::TrainSpec train = default_train_spec();
  hybrid::HybridConfig hybrid;
  /// Write runtime_s into the report CSV. Off by default so the report is
  /// byte-identical across runs; timings always go to timings.csv.
  bool report_runtime = false;

  static neural::NetworkConfig default_network();
  static neural::TrainSpec default_train_spec();
  /// Small matrix for smoke runs: walking only, 2 seeds, short trials.
  static BenchmarkConfig quick();
  /// Shrinks the matrix and the network to the quick profile, keeping the
  /// plant, noise and filter settings.
  void apply_quick();

  void validate() const;
};

struct TargetMetrics {
  double rmse_pct = 0.0;  // on cycle-normalised series
  double r2 = 0.0;
  double rmse = 0.0;          // raw samples, scored cycles
  double rmse_present = 0.0;  // raw samples where the plate reading exists
};

struct ModelResult {
  bool ran = false;
  std::array<TargetMetrics, 2> targets{};  // indexed by Target
  double runtime_s = 0.0;
};

/// One (task, case, speed, seed) job.
struct CellResult {
  plant::Task task = plant::Task::walking;
  CaseId case_id = CaseId::IV;
  double speed = 0.0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;

  std::array<ModelResult, 5> models{};  // indexed by ModelKind
  /// Gyro integrated from the initial angle, and the plate reading itself.
  double raw_theta_rmse = 0.0;
  double raw_force_rmse_present = 0.0;
  double lstm_val_rmse_force = 0.0;
  double lstm_source_fraction = 0.0;
  int bound_hits = 0;
  int psd_aborts = 0;
  int nan_states = 0;
  double train_s = 0.0;
};

struct ReportRow {
  std::string model;
  plant::Task task = plant::Task::walking;
  Target target = Target::grf;
  CaseId case_id = CaseId::IV;
  double speed = 0.0;
  double rmse_pct_median = 0.0;
  double rmse_pct_iqr = 0.0;
  double r2_median = 0.0;
  int n_seeds = 0;
  std::optional<double> runtime_s;

  bool operator==(const ReportRow&) const = default;
};

/// Phase-normalised truth and estimates of one cycle for plotting.
struct PlotSeries {
  plant::Task task = plant::Task::walking;
  CaseId case_id = CaseId::IV;
  double speed = 0.0;
  Target target = Target::grf;
  std::vector<double> truth;
  std::array<std::vector<double>, 5> estimates;  // empty when the model did not run
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;
  std::vector<CellResult> cells;
  std::vector<PlotSeries> plots;
  int psd_aborts = 0;
  int nan_states = 0;
  double wall_s = 0.0;

  std::size_t failed_cells() const;
};

/// Speed list actually run for a task.
std::vector<double> task_speeds(const BenchmarkConfig& config, plant::Task task);

/// Default profile of the task at `speed` with the config's shape override.
plant::GaitProfile task_profile(const BenchmarkConfig& config, plant::Task task, double speed);

/// Ground truth and the corrupted frame stream of one synthetic trial.
struct Trial {
  plant::GroundTruthTrace truth;
  std::vector<sensors::SensorFrame> frames;
};

/// Whole cycles covering config.trial_duration (at least two), with random
/// force dropout blocks. Gait, noise and dropout use substreams of `seed`.
Trial make_trial(const BenchmarkConfig& config, const plant::GaitProfile& profile,
                 std::uint64_t seed);

/// Prior used by every estimator: at rest, force at body weight, wide.
filters::GaussianBelief default_prior(const plant::PlantParams& plant);

/// LSTM inputs of the case and (theta, f_z) targets, one series per trial.
neural::TrainingData training_data(const std::vector<Trial>& trials, CaseId case_id,
                                   const plant::PlantParams& plant);

/// Runs one cell. Errors are caught and stored in the result.
CellResult run_cell(const BenchmarkConfig& config, plant::Task task, CaseId case_id, double speed,
                    int seed_index, std::vector<PlotSeries>* plots = nullptr);

/// Every cell on a pool of config.jobs threads, then median/IQR over seeds.
/// Rows are ordered target (grf, ankle_angle), case, model, task, speed.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/// Aggregates cells into report rows; used by run_benchmark.
std::vector<ReportRow> aggregate(const BenchmarkConfig& config, const std::vector<CellResult>& cells);

enum class ReportFormat { csv, markdown, plot };

/// report.csv, timings.csv, failures.csv (when any cell failed), tables.md and
/// plot_<task>_<case>_<speed>_<target>.csv. Throws InvalidArgument on a report
/// without rows and Error when the directory cannot be written.
void emit_report(const BenchmarkReport& report, const BenchmarkConfig& config,
                 const std::filesystem::path& directory,
                 const std::vector<ReportFormat>& formats = {ReportFormat::csv,
                                                             ReportFormat::markdown,
                                                             ReportFormat::plot});

/// Columns model,task,target,case,speed,rmse_pct_median,rmse_pct_iqr,r2_median,n_seeds,runtime_s.
void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

/// Markdown tables of RMSE (%) per model and task for GRF and ankle angle, one
/// pair per input case.
std::string markdown_tables(const std::vector<ReportRow>& rows, const BenchmarkConfig& config);

}  // namespace prosthestim::eval
