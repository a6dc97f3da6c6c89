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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "config.hpp"
#include "prosthestim/csv.hpp"
#include "prosthestim/ekf.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/kf.hpp"
#include "prosthestim/metrics.hpp"
#include "prosthestim/model.hpp"
#include "prosthestim/rng.hpp"

namespace {

namespace fs = std::filesystem;
using namespace prosthestim;
using cli::RunConfig;
using cli::UsageError;
using nlohmann::json;

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
  bool quick = false;
  std::string tasks;
  int seeds = 0;
  std::vector<std::string> models;
  std::string filter = "ukf";
  std::string model;
  std::string data;
  std::string truth;
  std::string resume;
  std::vector<CLI::Option*> seed_opts;
  std::vector<CLI::Option*> out_opts;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* seeds_opt = nullptr;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("prosthestim");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("PROSTHESTIM_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("PROSTHESTIM_LOG='{}' is not a log level; keeping info", env);
    else
      spdlog::set_level(level);
  }
}

/// Config file (or defaults) with the command-line flags applied on top.
RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig::defaults() : cli::load_config(f.config);
  auto given = [](const std::vector<CLI::Option*>& opts) {
    return std::any_of(opts.begin(), opts.end(), [](CLI::Option* o) { return o->count() > 0; });
  };
  if (given(f.seed_opts)) c.seed = f.seed;
  if (given(f.out_opts)) c.out = f.out;
  if (f.jobs_opt && f.jobs_opt->count()) c.benchmark.jobs = f.jobs;
  if (f.quick) c.benchmark.apply_quick();
  if (!f.tasks.empty()) {
    c.benchmark.tasks = cli::parse_task_list(f.tasks);
    c.simulate.tasks = c.benchmark.tasks;
  }
  if (f.seeds_opt && f.seeds_opt->count()) c.benchmark.seeds = f.seeds;
  if (!f.models.empty()) {
    c.benchmark.models.clear();
    for (const auto& m : f.models) {
      try {
        c.benchmark.models.push_back(eval::parse_model(m));
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
  }
  c.benchmark.master_seed = c.seed;
  c.validate();
  return c;
}

/// Writes the config file verbatim (when given) and the resolved settings.
void echo_config(const Flags& f, const RunConfig& c) {
  fs::create_directories(c.out);
  if (!f.config.empty()) fs::copy_file(f.config, c.out / "config.json", fs::copy_options::overwrite_existing);
  std::ofstream(c.out / "resolved_config.json") << cli::to_json(c).dump(2) << "\n";
}

std::string speed_tag(double speed) { return csv::format_number(speed); }

std::vector<double> speeds_for(const RunConfig& c, plant::Task task) {
  if (task == plant::Task::sitting) return {0.0};
  if (!c.simulate.speeds.empty()) return c.simulate.speeds;
  return {plant::default_profile(task).speed_kmh};
}

eval::Trial simulate_trial(const RunConfig& c, plant::Task task, double speed, int index) {
  eval::BenchmarkConfig b = c.benchmark;
  const auto profile = eval::task_profile(b, task, speed);
  b.trial_duration = c.simulate.cycles * profile.cycle_duration;
  b.force_dropout = c.simulate.force_dropout;
  b.dropout_blocks = c.simulate.dropout_blocks;
  return eval::make_trial(
      b, profile,
      derive_seed(c.seed, fmt::format("simulate/{}/{}/{}", plant::to_string(task), speed_tag(speed), index)));
}

int cmd_simulate(const Flags& f) {
  const RunConfig c = resolve(f);
  echo_config(f, c);
  std::size_t files = 0;
  for (plant::Task task : c.simulate.tasks)
    for (double speed : speeds_for(c, task))
      for (int k = 0; k < c.simulate.trials; ++k) {
        const auto trial = simulate_trial(c, task, speed, k);
        const auto stem = fmt::format("{}_{}_{}", plant::to_string(task), speed_tag(speed), k);
        plant::write_trace_csv(trial.truth, c.out / (stem + "_truth.csv"));
        sensors::write_frames_csv(trial.frames, c.out / (stem + "_sensors.csv"));
        spdlog::info("wrote {} ({} samples)", stem, trial.truth.size());
        files += 2;
      }
  std::cout << json{{"files", files}, {"out", c.out.string()}}.dump() << "\n";
  return 0;
}

fs::path truth_path_for(const fs::path& sensors_path) {
  std::string name = sensors_path.filename().string();
  const std::string suffix = "_sensors.csv";
  if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
    throw UsageError(fmt::format("{}: expected a *_sensors.csv file; pass --truth", sensors_path.string()));
  name.replace(name.size() - suffix.size(), suffix.size(), "_truth.csv");
  return sensors_path.parent_path() / name;
}

/// Frames and truth of a simulate output pair.
eval::Trial load_pair(const fs::path& sensors_path, const fs::path& truth_path) {
  if (!fs::is_regular_file(truth_path))
    throw UsageError(fmt::format("truth file {} not found (it supplies the lever arm)", truth_path.string()));
  eval::Trial t;
  t.frames = sensors::read_frames_csv(sensors_path);
  t.truth = plant::read_trace_csv(truth_path, plant::walking_profile().cycle_duration);
  if (t.frames.size() != t.truth.size())
    throw Error(fmt::format("{} has {} rows but {} has {}", sensors_path.string(), t.frames.size(),
                            truth_path.string(), t.truth.size()));
  return t;
}

int cmd_train(const Flags& f) {
  if (!f.data.empty() && !fs::is_directory(f.data))
    throw UsageError(fmt::format("data directory {} does not exist", f.data));
  if (!f.resume.empty() && !fs::is_regular_file(f.resume))
    throw UsageError(fmt::format("resume model {} does not exist", f.resume));
  const RunConfig c = resolve(f);
  echo_config(f, c);
  const auto& b = c.benchmark;
  const eval::CaseId case_id = b.cases.front();

  std::vector<eval::Trial> trials;
  if (!f.data.empty()) {
    std::vector<fs::path> sensor_files;
    for (const auto& e : fs::directory_iterator(f.data))
      if (e.path().filename().string().ends_with("_sensors.csv")) sensor_files.push_back(e.path());
    std::sort(sensor_files.begin(), sensor_files.end());
    for (const auto& p : sensor_files) trials.push_back(load_pair(p, truth_path_for(p)));
    if (trials.size() < 2)
      throw UsageError(fmt::format("{} holds {} *_sensors.csv trials, training needs at least 2",
                                   f.data, trials.size()));
  } else {
    const plant::Task task = b.tasks.front();
    const double speed = eval::task_speeds(b, task).front();
    const auto profile = eval::task_profile(b, task, speed);
    for (int k = 0; k < b.train_trials; ++k)
      trials.push_back(eval::make_trial(b, profile, derive_seed(c.seed, fmt::format("train/{}", k))));
  }

  const auto data = eval::training_data(trials, case_id, b.plant);
  neural::NetworkConfig net = b.network;
  net.input_channels = static_cast<int>(data.input_names.size());
  net.output_dims = 2;
  neural::TrainSpec spec = b.train;
  spec.seed = derive_seed(c.seed, "lstm");
  std::optional<neural::Model> resume;
  if (!f.resume.empty()) resume = neural::load_model(f.resume);

  const auto start = std::chrono::steady_clock::now();
  const auto result = neural::train(data, net, spec, resume);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path model_path = f.model.empty() ? c.out / "model.pstm" : fs::path(f.model);
  neural::save_model(result.model, model_path);
  neural::write_training_log(result.log, c.out / "training_log.csv");
  std::cout << json{{"model", model_path.string()},
                    {"trials", trials.size()},
                    {"epochs", result.log.size()},
                    {"best_epoch", result.best_epoch},
                    {"best_val_loss", result.best_val_loss},
                    {"train_s", seconds}}
                   .dump()
            << "\n";
  return 0;
}

json score(const std::vector<double>& truth, const std::vector<double>& estimate) {
  std::vector<double> m, p;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (std::isfinite(estimate[i])) {
      m.push_back(truth[i]);
      p.push_back(estimate[i]);
    }
  if (m.empty()) return {{"rmse", nullptr}, {"r2", nullptr}};
  return {{"rmse", eval::rmse(m, p)}, {"r2", eval::r_squared(m, p)}};
}

int cmd_estimate(const Flags& f) {
  static const std::vector<std::string> kFilters{"kf", "ekf", "ukf", "lstm", "hybrid"};
  if (std::find(kFilters.begin(), kFilters.end(), f.filter) == kFilters.end())
    throw UsageError(fmt::format("--filter must be one of kf, ekf, ukf, lstm, hybrid; got '{}'", f.filter));
  const bool needs_model = f.filter == "lstm" || f.filter == "hybrid";
  if (needs_model && f.model.empty())
    throw UsageError(fmt::format("--filter {} needs a trained network: pass --model PATH (see `train`)", f.filter));
  if (!f.model.empty() && !fs::is_regular_file(f.model))
    throw UsageError(fmt::format("model file {} does not exist", f.model));
  if (!f.data.empty() && !fs::is_regular_file(f.data))
    throw UsageError(fmt::format("sensor file {} does not exist", f.data));
  const RunConfig c = resolve(f);
  echo_config(f, c);
  const auto& b = c.benchmark;

  eval::Trial trial;
  if (f.data.empty()) {
    const plant::Task task = c.simulate.tasks.front();
    trial = simulate_trial(c, task, speeds_for(c, task).front(), 0);
  } else {
    trial = load_pair(f.data, f.truth.empty() ? truth_path_for(f.data) : fs::path(f.truth));
  }
  const auto& frames = trial.frames;
  const auto& r_cop = trial.truth.r_cop;
  const auto process = filters::ProcessModel::make(b.plant, b.process.theta, b.process.theta_dot, b.process.force);
  const auto measurement = filters::MeasurementModel::from(b.plant, b.fuse_accel);
  const auto prior = eval::default_prior(b.plant);
  std::optional<neural::Model> model;
  if (needs_model) model = neural::load_model(f.model);

  const auto start = std::chrono::steady_clock::now();
  std::vector<double> theta, force;
  const fs::path trace_path = c.out / fmt::format("trace_{}.csv", f.filter);
  json extra = json::object();
  if (f.filter == "lstm") {
    const Eigen::MatrixXd pred = hybrid::predict_trial(*model, frames, r_cop, b.plant);
    csv::Writer w(trace_path, {"t", "theta_hat", "f_z_hat"});
    for (Eigen::Index i = 0; i < pred.cols(); ++i) {
      theta.push_back(pred(0, i));
      force.push_back(pred(1, i));
      w.row({csv::format_number(frames[static_cast<std::size_t>(i)].t), csv::format_number(pred(0, i)),
             csv::format_number(pred(1, i))});
    }
  } else if (f.filter == "hybrid") {
    hybrid::HybridContext ctx{process, measurement, b.noise, b.ukf, b.hybrid};
    hybrid::HybridEstimator est(ctx, std::make_unique<hybrid::StreamingPredictor>(
                                         std::make_shared<const neural::Model>(std::move(*model)), b.plant));
    const auto tr = hybrid::run_hybrid(est, frames, r_cop, prior);
    hybrid::write_hybrid_trace_csv(tr, trace_path);
    theta = tr.filter.component(filters::kTheta);
    force = tr.filter.component(filters::kForce);
    extra = {{"lstm_source_fraction", tr.lstm_source_fraction()}, {"bound_hits", tr.total_bound_hits()}};
  } else {
    std::unique_ptr<filters::Estimator> est;
    if (f.filter == "kf") est = std::make_unique<filters::LinearKalmanFilter>(process, measurement, b.noise);
    else if (f.filter == "ekf") est = std::make_unique<filters::ExtendedKalmanFilter>(process, measurement, b.noise);
    else est = std::make_unique<filters::UnscentedKalmanFilter>(process, measurement, b.noise, b.ukf);
    const auto tr = filters::run_filter(*est, frames, r_cop, prior);
    filters::write_filter_trace_csv(tr, trace_path);
    theta = tr.component(filters::kTheta);
    force = tr.component(filters::kForce);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json summary{{"filter", f.filter},
               {"samples", frames.size()},
               {"trace", trace_path.string()},
               {"theta", score(trial.truth.theta, theta)},
               {"f_z", score(trial.truth.f_grf, force)},
               {"runtime_s", seconds}};
  summary.update(extra);
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_benchmark(const Flags& f) {
  const RunConfig c = resolve(f);
  echo_config(f, c);
  spdlog::info("benchmark: {} task(s), {} seed(s), {} job(s)", c.benchmark.tasks.size(), c.benchmark.seeds,
               c.benchmark.jobs);
  const auto report = eval::run_benchmark(c.benchmark);
  eval::emit_report(report, c.benchmark, c.out);
  std::cout << eval::markdown_tables(report.rows, c.benchmark);
  spdlog::info("{} cell(s), {} failed, {} PSD abort(s), {} non-finite state(s), {:.1f} s", report.cells.size(),
               report.failed_cells(), report.psd_aborts, report.nan_states, report.wall_s);
  if (report.failed_cells() == report.cells.size()) {
    spdlog::error("every benchmark cell failed; see {}", (c.out / "failures.csv").string());
    return kRuntimeFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Ankle prosthesis state estimation: simulation, filters, LSTM and the hybrid LSTM+UKF."};
  app.require_subcommand(1);
  app.footer("Default configuration (override with --config FILE; flags win):\n" +
             cli::to_json(RunConfig::defaults()).dump(2) +
             "\n\nExit codes: 0 success, 1 runtime failure, 2 usage or config error.\n"
             "Log level: PROSTHESTIM_LOG=trace|debug|info|warn|error|off (default info).");
  Flags f;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    f.seed_opts.push_back(sub->add_option("--seed", f.seed, "master seed"));
    f.out_opts.push_back(sub->add_option("--out", f.out, "output directory"));
  };
  auto* simulate = app.add_subcommand("simulate", "write ground-truth and sensor CSVs");
  common(simulate);
  simulate->add_option("--tasks", f.tasks, "comma-separated tasks: walking,sitting,running");

  auto* train = app.add_subcommand("train", "train the LSTM and write model.pstm");
  common(train);
  train->add_option("--data", f.data, "directory of *_sensors.csv/*_truth.csv pairs (default: synthesize)");
  train->add_option("--model", f.model, "output model path (default OUT/model.pstm)");
  train->add_option("--resume", f.resume, "continue from this model's weights");
  train->add_option("--tasks", f.tasks, "task to synthesize training trials for");
  train->add_flag("--quick", f.quick, "small network and few epochs");

  auto* estimate = app.add_subcommand("estimate", "run one estimator over a sensor stream");
  common(estimate);
  estimate->add_option("--filter", f.filter, "kf, ekf, ukf, lstm or hybrid")->capture_default_str();
  estimate->add_option("--model", f.model, "trained model (lstm and hybrid)");
  estimate->add_option("--data", f.data, "*_sensors.csv file (default: simulate one trial)");
  estimate->add_option("--truth", f.truth, "matching *_truth.csv (default: derived from --data)");
  estimate->add_option("--tasks", f.tasks, "task to simulate when --data is absent");

  auto* bench = app.add_subcommand("benchmark", "five-model benchmark and report tables");
  common(bench);
  f.jobs_opt = bench->add_option("--jobs", f.jobs, "worker threads (default: logical cores)")->check(CLI::PositiveNumber);
  bench->add_flag("--quick", f.quick, "walking only, 2 seeds, small network");
  bench->add_option("--tasks", f.tasks, "comma-separated tasks: walking,sitting,running");
  f.seeds_opt = bench->add_option("--seeds", f.seeds, "seeds per cell")->check(CLI::PositiveNumber);
  bench->add_option("--models", f.models, "subset of kf ekf ukf lstm lstm_ukf");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }
  try {
    if (*simulate) return cmd_simulate(f);
    if (*train) return cmd_train(f);
    if (*estimate) return cmd_estimate(f);
    return cmd_benchmark(f);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
