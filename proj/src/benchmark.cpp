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

#include "prosthestim/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "prosthestim/csv.hpp"
#include "prosthestim/ekf.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/features.hpp"
#include "prosthestim/kf.hpp"
#include "prosthestim/metrics.hpp"

namespace prosthestim::eval {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Counts trace entries whose mean or variances are not finite or negative.
int count_bad_states(const filters::FilterTrace& trace) {
  int bad = 0;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (!trace.mean[i].allFinite() || !trace.cov_diag[i].allFinite() ||
        (trace.cov_diag[i].array() < 0).any())
      ++bad;
  return bad;
}

/// Squared-error sums and cycle-normalised series of one model over all test trials.
struct Accumulator {
  std::array<std::vector<double>, 2> truth_cycles, est_cycles;
  std::array<double, 2> sq{}, sq_present{};
  std::size_t n = 0, n_present = 0;
};

void score(Accumulator& acc, const Trial& trial, const std::vector<double>& theta,
           const std::vector<double>& force, const std::vector<std::size_t>& boundaries) {
  const auto& truth = trial.truth;
  for (std::size_t i = boundaries.front(); i <= boundaries.back(); ++i) {
    const double e_f = force[i] - truth.f_grf[i];
    const double e_t = theta[i] - truth.theta[i];
    acc.sq[0] += e_f * e_f;
    acc.sq[1] += e_t * e_t;
    ++acc.n;
    if (trial.frames[i].f_z_meas) {
      acc.sq_present[0] += e_f * e_f;
      acc.sq_present[1] += e_t * e_t;
      ++acc.n_present;
    }
  }
  const std::array<const std::vector<double>*, 2> est{&force, &theta};
  const std::array<const std::vector<double>*, 2> tru{&truth.f_grf, &truth.theta};
  for (int k = 0; k < 2; ++k) {
    auto r = resample_cycle(*tru[static_cast<std::size_t>(k)], boundaries);
    auto e = resample_cycle(*est[static_cast<std::size_t>(k)], boundaries);
    auto& tc = acc.truth_cycles[static_cast<std::size_t>(k)];
    auto& ec = acc.est_cycles[static_cast<std::size_t>(k)];
    tc.insert(tc.end(), r.begin(), r.end());
    ec.insert(ec.end(), e.begin(), e.end());
  }
}

TargetMetrics finish(const Accumulator& acc, int k) {
  const auto i = static_cast<std::size_t>(k);
  TargetMetrics m;
  m.rmse_pct = rmse_percent(acc.truth_cycles[i], acc.est_cycles[i]);
  m.r2 = r_squared(acc.truth_cycles[i], acc.est_cycles[i]);
  m.rmse = std::sqrt(acc.sq[i] / static_cast<double>(acc.n));
  m.rmse_present =
      acc.n_present ? std::sqrt(acc.sq_present[i] / static_cast<double>(acc.n_present)) : kNaN;
  return m;
}

std::vector<double> column(const filters::FilterTrace& trace, int index) {
  return trace.component(index);
}

bool wants(const BenchmarkConfig& c, ModelKind m) {
  return std::find(c.models.begin(), c.models.end(), m) != c.models.end();
}

std::string task_label(plant::Task task) {
  std::string s(plant::to_string(task));
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

std::string_view to_string(ModelKind model) {
  switch (model) {
    case ModelKind::kf:
      return "KF";
    case ModelKind::ekf:
      return "EKF";
    case ModelKind::ukf:
      return "UKF";
    case ModelKind::lstm:
      return "LSTM";
    case ModelKind::lstm_ukf:
      return "LSTM+UKF";
  }
  return "UKF";
}

std::string_view model_key(ModelKind model) {
  switch (model) {
    case ModelKind::kf:
      return "kf";
    case ModelKind::ekf:
      return "ekf";
    case ModelKind::ukf:
      return "ukf";
    case ModelKind::lstm:
      return "lstm";
    case ModelKind::lstm_ukf:
      return "lstm_ukf";
  }
  return "ukf";
}

ModelKind parse_model(std::string_view name) {
  for (ModelKind m : kAllModels)
    if (name == to_string(m) || name == model_key(m)) return m;
  if (name == "hybrid") return ModelKind::lstm_ukf;
  throw InvalidArgument(fmt::format("unknown model '{}'", name));
}

std::string_view to_string(Target target) {
  return target == Target::grf ? "grf" : "ankle_angle";
}

Target parse_target(std::string_view name) {
  if (name == "grf") return Target::grf;
  if (name == "ankle_angle") return Target::ankle_angle;
  throw InvalidArgument(fmt::format("unknown target '{}'", name));
}

neural::NetworkConfig BenchmarkConfig::default_network() {
  neural::NetworkConfig n;
  n.layers = 2;
  n.units = 16;
  n.dropout = 0.0;
  n.learning_rate = 3e-3;
  n.window_length = 24;
  n.decimation = 10;
  return n;
}

neural::TrainSpec BenchmarkConfig::default_train_spec() {
  neural::TrainSpec s;
  s.max_epochs = 40;
  s.patience = 6;
  s.batch_size = 32;
  s.stride = 10;
  return s;
}

BenchmarkConfig BenchmarkConfig::quick() {
  BenchmarkConfig c;
  c.apply_quick();
  return c;
}

void BenchmarkConfig::apply_quick() {
  tasks = {plant::Task::walking};
  seeds = 2;
  train_trials = 4;
  test_trials = 1;
  trial_duration = 3.0;
  network.units = 8;
  network.window_length = 12;
  train.max_epochs = 5;
  train.patience = 3;
}

void BenchmarkConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidArgument(m); };
  if (tasks.empty()) fail("benchmark.tasks must not be empty");
  if (cases.empty()) fail("benchmark.cases must not be empty");
  if (models.empty()) fail("benchmark.models must not be empty");
  for (double s : speeds)
    if (!(s > 0) || !std::isfinite(s)) fail(fmt::format("benchmark.speeds: bad speed {}", s));
  if (seeds < 1) fail(fmt::format("benchmark.seeds must be >= 1, got {}", seeds));
  if (jobs < 1) fail(fmt::format("benchmark.jobs must be >= 1, got {}", jobs));
  if (train_trials < 2) fail(fmt::format("benchmark.train_trials must be >= 2, got {}", train_trials));
  if (test_trials < 1) fail(fmt::format("benchmark.test_trials must be >= 1, got {}", test_trials));
  if (!(trial_duration > 0) || !std::isfinite(trial_duration))
    fail(fmt::format("benchmark.trial_duration must be > 0, got {}", trial_duration));
  if (!(force_dropout >= 0 && force_dropout <= 1))
    fail(fmt::format("benchmark.force_dropout must lie in [0, 1], got {}", force_dropout));
  if (dropout_blocks < 1)
    fail(fmt::format("benchmark.dropout_blocks must be >= 1, got {}", dropout_blocks));
  plant.validate();
  noise.validate();
  for (auto [name, v] : {std::pair{"process.theta", process.theta},
                         std::pair{"process.theta_dot", process.theta_dot},
                         std::pair{"process.force", process.force}})
    if (!(v >= 0) || !std::isfinite(v)) fail(fmt::format("{} must be finite and >= 0, got {}", name, v));
  filters::ProcessModel::make(plant, process.theta, process.theta_dot, process.force).validate();
  ukf.validate(filters::kStateDim);
  neural::NetworkConfig n = network;
  n.input_channels = 1;
  n.validate();
  train.validate();
  hybrid.validate();
}

std::size_t BenchmarkReport::failed_cells() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok; }));
}

plant::GaitProfile task_profile(const BenchmarkConfig& c, plant::Task task, double speed) {
  plant::GaitProfile p = task == plant::Task::walking   ? plant::walking_profile(speed)
                         : task == plant::Task::running ? plant::running_profile(speed)
                                                        : plant::sitting_profile();
  if (const auto it = c.gait.find(task); it != c.gait.end()) {
    const double duration = p.cycle_duration;
    p = it->second;
    p.task = task;
    p.speed_kmh = task == plant::Task::sitting ? p.speed_kmh : speed;
    p.cycle_duration = duration;
  }
  p.validate();
  return p;
}

Trial make_trial(const BenchmarkConfig& c, const plant::GaitProfile& profile, std::uint64_t seed) {
  const auto cycles = static_cast<std::size_t>(
      std::max(2.0, std::ceil(c.trial_duration / profile.cycle_duration - 1e-9)));
  Trial t;
  t.truth = plant::generate_gait(profile, cycles, c.plant, derive_seed(seed, "gait"));
  sensors::NoiseSpec noise = c.noise;
  noise.seed = derive_seed(seed, "noise");
  const auto dropout = sensors::PhaseIntervalSet::random(
      c.force_dropout, static_cast<std::size_t>(c.dropout_blocks), derive_seed(seed, "dropout"));
  t.frames = sensors::corrupt_trace(t.truth, noise, dropout);
  return t;
}

filters::GaussianBelief default_prior(const plant::PlantParams& p) {
  filters::GaussianBelief b;
  b.mean << 0.0, 0.0, p.mass * p.gravity;
  b.cov.setZero();
  b.cov.diagonal() << 1e-2, 1e-1, (p.mass * p.gravity) * (p.mass * p.gravity);
  return b;
}

neural::TrainingData training_data(const std::vector<Trial>& trials, CaseId case_id,
                                   const plant::PlantParams& plant) {
  const auto inputs = CaseSpec{case_id}.lstm_inputs();
  neural::TrainingData data;
  data.input_names = hybrid::feature_names(inputs);
  data.target_names = hybrid::target_names();
  for (const auto& t : trials)
    data.trials.push_back({hybrid::feature_matrix(inputs, t.frames, t.truth.r_cop, plant),
                           hybrid::target_matrix(t.truth)});
  return data;
}

std::vector<double> task_speeds(const BenchmarkConfig& config, plant::Task task) {
  if (task == plant::Task::sitting) return {0.0};
  if (!config.speeds.empty()) return config.speeds;
  return {plant::default_profile(task).speed_kmh};
}

CellResult run_cell(const BenchmarkConfig& config, plant::Task task, CaseId case_id, double speed,
                    int seed_index, std::vector<PlotSeries>* plots) {
  CellResult cell;
  cell.task = task;
  cell.case_id = case_id;
  cell.speed = speed;
  cell.seed_index = seed_index;
  cell.seed = derive_seed(config.master_seed,
                          fmt::format("cell/{}/{}/{}/{}", plant::to_string(task),
                                      to_string(case_id), csv::format_number(speed), seed_index));
  try {
    const plant::GaitProfile profile = task_profile(config, task, speed);
    std::vector<Trial> train_set, test_set;
    for (int k = 0; k < config.train_trials; ++k)
      train_set.push_back(make_trial(config, profile, derive_seed(cell.seed, fmt::format("train/{}", k))));
    for (int k = 0; k < config.test_trials; ++k)
      test_set.push_back(make_trial(config, profile, derive_seed(cell.seed, fmt::format("test/{}", k))));

    const auto process = filters::ProcessModel::make(config.plant, config.process.theta,
                                                     config.process.theta_dot, config.process.force);
    const auto measurement = filters::MeasurementModel::from(config.plant, config.fuse_accel);
    const filters::GaussianBelief prior = default_prior(config.plant);

    std::optional<neural::Model> model;
    if (wants(config, ModelKind::lstm) || wants(config, ModelKind::lstm_ukf)) {
      const auto start = Clock::now();
      const neural::TrainingData data = training_data(train_set, case_id, config.plant);
      neural::NetworkConfig net = config.network;
      net.input_channels = static_cast<int>(data.input_names.size());
      net.output_dims = 2;
      neural::TrainSpec ts = config.train;
      ts.seed = derive_seed(cell.seed, "lstm");
      model = neural::train(data, net, ts).model;
      cell.train_s = seconds_since(start);
    }

    std::array<Accumulator, 5> acc;
    double raw_theta_sq = 0, raw_force_sq = 0;
    std::size_t raw_n = 0, raw_force_n = 0;
    std::size_t absent_frames = 0, lstm_frames = 0;

    for (std::size_t k = 0; k < test_set.size(); ++k) {
      const Trial& trial = test_set[k];
      const auto& truth = trial.truth;
      const auto spc = static_cast<std::size_t>(std::llround(truth.cycle_duration / truth.dt));
      const std::vector<std::size_t> starts(truth.cycle_starts.begin() + 1, truth.cycle_starts.end());
      const auto bounds = cycle_boundaries(starts, truth.size(), spc);
      if (bounds.size() < 2) throw InvalidArgument("test trial has no complete scored cycle");
      if (model && neural::first_predictable(model->config()) > static_cast<Eigen::Index>(bounds.front()))
        throw InvalidArgument("LSTM window is longer than the first gait cycle");

      std::array<std::vector<double>, 5> theta, force;
      auto run = [&](ModelKind m, auto&& body) {
        if (!wants(config, m)) return;
        const auto start = Clock::now();
        try {
          body(theta[static_cast<std::size_t>(m)], force[static_cast<std::size_t>(m)]);
        } catch (const CovarianceNotPsd&) {
          ++cell.psd_aborts;
          throw;
        }
        auto& r = cell.models[static_cast<std::size_t>(m)];
        r.ran = true;
        r.runtime_s += seconds_since(start);
        score(acc[static_cast<std::size_t>(m)], trial, theta[static_cast<std::size_t>(m)],
              force[static_cast<std::size_t>(m)], bounds);
      };
      auto filter_run = [&](filters::Estimator& est) {
        return [&](std::vector<double>& th, std::vector<double>& f) {
          const auto tr = filters::run_filter(est, trial.frames, truth.r_cop, prior);
          cell.nan_states += count_bad_states(tr);
          th = column(tr, filters::kTheta);
          f = column(tr, filters::kForce);
        };
      };
      filters::LinearKalmanFilter kf(process, measurement, config.noise);
      filters::ExtendedKalmanFilter ekf(process, measurement, config.noise);
      filters::UnscentedKalmanFilter ukf(process, measurement, config.noise, config.ukf);
      run(ModelKind::kf, filter_run(kf));
      run(ModelKind::ekf, filter_run(ekf));
      run(ModelKind::ukf, filter_run(ukf));

      Eigen::MatrixXd pred;
      if (model) {
        const auto start = Clock::now();
        pred = hybrid::predict_trial(*model, trial.frames, truth.r_cop, config.plant);
        const double dt = seconds_since(start);
        cell.models[static_cast<std::size_t>(ModelKind::lstm)].runtime_s += dt;
        cell.models[static_cast<std::size_t>(ModelKind::lstm_ukf)].runtime_s += dt;
      }
      run(ModelKind::lstm, [&](std::vector<double>& th, std::vector<double>& f) {
        th.assign(pred.row(0).data(), pred.row(0).data() + 0);
        th.resize(static_cast<std::size_t>(pred.cols()));
        f.resize(static_cast<std::size_t>(pred.cols()));
        for (Eigen::Index i = 0; i < pred.cols(); ++i) {
          th[static_cast<std::size_t>(i)] = pred(0, i);
          f[static_cast<std::size_t>(i)] = pred(1, i);
        }
      });
      run(ModelKind::lstm_ukf, [&](std::vector<double>& th, std::vector<double>& f) {
        hybrid::HybridContext ctx{process, measurement, config.noise, config.ukf, config.hybrid};
        hybrid::HybridEstimator est(ctx, std::make_unique<hybrid::PrecomputedPredictor>(pred));
        const auto tr = hybrid::run_hybrid(est, trial.frames, truth.r_cop, prior);
        cell.nan_states += count_bad_states(tr.filter);
        cell.bound_hits += tr.total_bound_hits();
        for (std::size_t i = 0; i < tr.size(); ++i) {
          if (!tr.predicted[i] || tr.source[i] == hybrid::ForceSource::plate) continue;
          ++absent_frames;
          if (tr.source[i] == hybrid::ForceSource::lstm) ++lstm_frames;
        }
        th = column(tr.filter, filters::kTheta);
        f = column(tr.filter, filters::kForce);
      });

      // Raw baselines: the gyro integrated from the prior angle, and the plate itself.
      double angle = prior.mean(filters::kTheta);
      std::vector<double> gyro_theta(truth.size());
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (i > 0) angle += config.plant.dt * trial.frames[i - 1].omega;
        gyro_theta[i] = angle;
      }
      for (std::size_t i = bounds.front(); i <= bounds.back(); ++i) {
        raw_theta_sq += (gyro_theta[i] - truth.theta[i]) * (gyro_theta[i] - truth.theta[i]);
        ++raw_n;
        if (const auto& f = trial.frames[i].f_z_meas) {
          raw_force_sq += (*f - truth.f_grf[i]) * (*f - truth.f_grf[i]);
          ++raw_force_n;
        }
      }

      if (plots && k == 0) {
        const std::vector<std::size_t> first{bounds[0], bounds[1]};
        for (Target target : kAllTargets) {
          PlotSeries p;
          p.task = task;
          p.case_id = case_id;
          p.speed = speed;
          p.target = target;
          const bool grf = target == Target::grf;
          p.truth = resample_cycle(grf ? truth.f_grf : truth.theta, first);
          for (ModelKind m : kAllModels) {
            const auto i = static_cast<std::size_t>(m);
            if (cell.models[i].ran) p.estimates[i] = resample_cycle(grf ? force[i] : theta[i], first);
          }
          plots->push_back(std::move(p));
        }
      }
    }

    for (ModelKind m : kAllModels) {
      auto& r = cell.models[static_cast<std::size_t>(m)];
      if (!r.ran) continue;
      for (Target t : kAllTargets)
        r.targets[static_cast<std::size_t>(t)] = finish(acc[static_cast<std::size_t>(m)], static_cast<int>(t));
    }
    cell.raw_theta_rmse = std::sqrt(raw_theta_sq / static_cast<double>(raw_n));
    cell.raw_force_rmse_present =
        raw_force_n ? std::sqrt(raw_force_sq / static_cast<double>(raw_force_n)) : kNaN;
    cell.lstm_source_fraction =
        absent_frames ? static_cast<double>(lstm_frames) / static_cast<double>(absent_frames) : 1.0;
    cell.ok = cell.nan_states == 0;
    if (!cell.ok) cell.error = fmt::format("{} non-finite filter states", cell.nan_states);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

std::vector<ReportRow> aggregate(const BenchmarkConfig& config,
                                 const std::vector<CellResult>& cells) {
  std::vector<ReportRow> rows;
  for (Target target : kAllTargets)
    for (CaseId case_id : config.cases)
      for (ModelKind m : kAllModels) {
        if (!wants(config, m)) continue;
        for (plant::Task task : config.tasks)
          for (double speed : task_speeds(config, task)) {
            std::vector<double> pct, r2;
            double runtime = 0;
            for (const auto& c : cells) {
              if (!c.ok || c.task != task || c.case_id != case_id || c.speed != speed) continue;
              const auto& r = c.models[static_cast<std::size_t>(m)];
              if (!r.ran) continue;
              pct.push_back(r.targets[static_cast<std::size_t>(target)].rmse_pct);
              r2.push_back(r.targets[static_cast<std::size_t>(target)].r2);
              runtime += r.runtime_s + (m == ModelKind::lstm || m == ModelKind::lstm_ukf ? c.train_s : 0);
            }
            ReportRow row;
            row.model = std::string(to_string(m));
            row.task = task;
            row.target = target;
            row.case_id = case_id;
            row.speed = speed;
            row.rmse_pct_median = median(pct);
            row.rmse_pct_iqr = iqr(pct);
            row.r2_median = median(r2);
            row.n_seeds = static_cast<int>(pct.size());
            if (config.report_runtime) row.runtime_s = runtime;
            rows.push_back(row);
          }
      }
  return rows;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  const auto start = Clock::now();
  struct Job {
    plant::Task task;
    CaseId case_id;
    double speed;
    int seed;
  };
  std::vector<Job> jobs;
  for (plant::Task task : config.tasks)
    for (CaseId case_id : config.cases)
      for (double speed : task_speeds(config, task))
        for (int s = 0; s < config.seeds; ++s) jobs.push_back({task, case_id, speed, s});

  std::vector<CellResult> cells(jobs.size());
  std::vector<std::vector<PlotSeries>> plots(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& j = jobs[i];
      cells[i] = run_cell(config, j.task, j.case_id, j.speed, j.seed,
                          j.seed == 0 ? &plots[i] : nullptr);
      if (cells[i].ok)
        spdlog::info("cell {} case {} speed {} seed {} done", plant::to_string(j.task),
                     to_string(j.case_id), j.speed, j.seed);
      else
        spdlog::warn("cell {} case {} speed {} seed {} failed: {}", plant::to_string(j.task),
                     to_string(j.case_id), j.speed, j.seed, cells[i].error);
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BenchmarkReport report;
  report.cells = std::move(cells);
  for (auto& p : plots)
    for (auto& s : p) report.plots.push_back(std::move(s));
  for (const auto& c : report.cells) {
    report.psd_aborts += c.psd_aborts;
    report.nan_states += c.nan_states;
  }
  report.rows = aggregate(config, report.cells);
  report.wall_s = seconds_since(start);
  return report;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  csv::Writer w(path, {"model", "task", "target", "case", "speed", "rmse_pct_median",
                       "rmse_pct_iqr", "r2_median", "n_seeds", "runtime_s"});
  for (const auto& r : rows)
    w.row({r.model, std::string(plant::to_string(r.task)), std::string(to_string(r.target)),
           std::string(to_string(r.case_id)), csv::format_number(r.speed),
           csv::format_number(r.rmse_pct_median), csv::format_number(r.rmse_pct_iqr),
           csv::format_number(r.r2_median), std::to_string(r.n_seeds),
           r.runtime_s ? csv::format_number(*r.runtime_s) : "NA"});
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path, true);
  const std::vector<std::string> expected{"model", "task", "target", "case", "speed",
                                          "rmse_pct_median", "rmse_pct_iqr", "r2_median",
                                          "n_seeds", "runtime_s"};
  if (t.header != expected)
    throw ParseError(fmt::format("{}: unexpected report header", t.path), t.path, 1, 0);
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& cells = t.rows[i];
    if (cells.size() != expected.size())
      throw ParseError(fmt::format("{}:{}: expected {} columns", t.path, t.first_data_line + i,
                                   expected.size()),
                       t.path, t.first_data_line + i, cells.size());
    ReportRow r;
    r.model = std::string(to_string(parse_model(cells[0])));
    r.task = plant::parse_task(cells[1]);
    r.target = parse_target(cells[2]);
    r.case_id = parse_case(cells[3]);
    r.speed = t.number(i, 4);
    r.rmse_pct_median = t.number(i, 5);
    r.rmse_pct_iqr = t.number(i, 6);
    r.r2_median = t.number(i, 7);
    r.n_seeds = static_cast<int>(t.number(i, 8));
    if (cells[9] != "NA") r.runtime_s = t.number(i, 9);
    rows.push_back(r);
  }
  return rows;
}

std::string markdown_tables(const std::vector<ReportRow>& rows, const BenchmarkConfig& config) {
  std::string out;
  struct Column {
    plant::Task task;
    double speed;
    std::string label;
  };
  std::vector<Column> columns;
  for (plant::Task task : config.tasks) {
    const auto speeds = task_speeds(config, task);
    for (double s : speeds)
      columns.push_back({task, s,
                         speeds.size() == 1 ? task_label(task)
                                            : fmt::format("{} {} km/h", task_label(task), s)});
  }
  auto find = [&](ModelKind m, const Column& col, Target target, CaseId case_id) {
    for (const auto& r : rows)
      if (r.model == to_string(m) && r.task == col.task && r.speed == col.speed &&
          r.target == target && r.case_id == case_id)
        return r.rmse_pct_median;
    return kNaN;
  };
  for (CaseId case_id : config.cases) {
    for (Target target : kAllTargets) {
      out += fmt::format("RMSE (%) for {} Estimation Across Tasks (case {})\n\n",
                         target == Target::grf ? "GRF" : "Ankle Angle", to_string(case_id));
      out += "| Model |";
      for (const auto& c : columns) out += fmt::format(" {} |", c.label);
      out += "\n|---|";
      for (std::size_t k = 0; k < columns.size(); ++k) out += "---|";
      out += "\n";
      std::vector<double> best(columns.size(), std::numeric_limits<double>::infinity());
      for (ModelKind m : kAllModels) {
        if (!wants(config, m)) continue;
        for (std::size_t k = 0; k < columns.size(); ++k) {
          const double v = find(m, columns[k], target, case_id);
          if (v < best[k]) best[k] = v;
        }
      }
      for (ModelKind m : kAllModels) {
        if (!wants(config, m)) continue;
        out += fmt::format("| {} |", to_string(m));
        for (std::size_t k = 0; k < columns.size(); ++k) {
          const double v = find(m, columns[k], target, case_id);
          const std::string cell = std::isnan(v) ? "n/a" : fmt::format("{:.2f}", v);
          out += v == best[k] ? fmt::format(" **{}** |", cell) : fmt::format(" {} |", cell);
        }
        out += "\n";
      }
      out += "\n";
    }
  }
  out += fmt::format(
      "RMSE (%) is 100 * RMSE / (max - min) of the true signal over 1001-point normalised "
      "cycles. Peak or mean normalisation would give different magnitudes with the same "
      "ordering. Values are medians over {} seeds; report.csv holds the IQR. Force dropout: "
      "{:.0f}% of each cycle.\n",
      config.seeds, 100 * config.force_dropout);
  return out;
}

void emit_report(const BenchmarkReport& report, const BenchmarkConfig& config,
                 const std::filesystem::path& directory, const std::vector<ReportFormat>& formats) {
  if (report.rows.empty()) throw InvalidArgument("emit_report: the report has no rows");
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error(fmt::format("cannot create output directory {}: {}", directory.string(), ec.message()));
  auto has = [&](ReportFormat f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };

  if (has(ReportFormat::csv)) {
    write_report_csv(report.rows, directory / "report.csv");
    csv::Writer timings(directory / "timings.csv",
                        {"task", "case", "speed", "seed_index", "model", "runtime_s", "train_s"});
    for (const auto& c : report.cells)
      for (ModelKind m : kAllModels) {
        const auto& r = c.models[static_cast<std::size_t>(m)];
        if (!r.ran) continue;
        timings.row({std::string(plant::to_string(c.task)), std::string(to_string(c.case_id)),
                     csv::format_number(c.speed), std::to_string(c.seed_index),
                     std::string(to_string(m)), csv::format_number(r.runtime_s),
                     csv::format_number(m == ModelKind::lstm || m == ModelKind::lstm_ukf ? c.train_s : 0.0)});
      }
    if (report.failed_cells() > 0) {
      csv::Writer failures(directory / "failures.csv", {"task", "case", "speed", "seed_index", "error"});
      for (const auto& c : report.cells)
        if (!c.ok) {
          std::string msg = c.error;
          std::replace(msg.begin(), msg.end(), ',', ';');
          std::replace(msg.begin(), msg.end(), '\n', ' ');
          failures.row({std::string(plant::to_string(c.task)), std::string(to_string(c.case_id)),
                        csv::format_number(c.speed), std::to_string(c.seed_index), msg});
        }
    }
  }
  if (has(ReportFormat::markdown)) {
    std::ofstream md(directory / "tables.md", std::ios::binary);
    if (!md) throw Error(fmt::format("cannot write {}", (directory / "tables.md").string()));
    md << markdown_tables(report.rows, config);
    if (report.failed_cells() > 0)
      md << fmt::format("\n{} of {} cells failed; see failures.csv.\n", report.failed_cells(),
                        report.cells.size());
  }
  if (has(ReportFormat::plot)) {
    for (const auto& p : report.plots) {
      const auto name = fmt::format("plot_{}_{}_{}_{}.csv", plant::to_string(p.task),
                                    to_string(p.case_id), csv::format_number(p.speed),
                                    to_string(p.target));
      csv::Writer w(directory / name, {"phase_pct", "truth", "kf", "ekf", "ukf", "lstm", "lstm_ukf"});
      for (std::size_t i = 0; i < p.truth.size(); ++i) {
        std::vector<std::string> cells{
            csv::format_number(100.0 * static_cast<double>(i) / static_cast<double>(kCyclePoints - 1)),
            csv::format_number(p.truth[i])};
        for (const auto& e : p.estimates) cells.push_back(e.empty() ? "NA" : csv::format_number(e[i]));
        w.row(cells);
      }
    }
  }
}

}  // namespace prosthestim::eval
