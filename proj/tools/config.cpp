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

#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::cli {

namespace {

using nlohmann::json;

/// Walks one object of the document, remembering which keys were consumed.
class Section {
public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw UsageError(fmt::format("{}: expected an object", where()));
  }

  template <typename T>
  void read(const char* key, T& target) {
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    seen_.insert(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw UsageError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw UsageError("");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned()) throw UsageError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw UsageError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw UsageError("");
      }
      target = it->get<T>();
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{}: expected {}, got {}", child(key), type_name<T>(),
                                   it->dump()));
    }
  }

  /// Converts string entries (or a list of them) through `parse`.
  template <typename T, typename Parse>
  void read_enum_list(const char* key, std::vector<T>& target, Parse parse) {
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    seen_.insert(key);
    if (!it->is_array()) throw UsageError(fmt::format("{}: expected a list", child(key)));
    std::vector<T> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& v = (*it)[i];
      if (!v.is_string())
        throw UsageError(fmt::format("{}[{}]: expected a string", child(key), i));
      try {
        out.push_back(parse(v.template get<std::string>()));
      } catch (const InvalidArgument& e) {
        throw UsageError(fmt::format("{}[{}]: {}", child(key), i, e.what()));
      }
    }
    target = std::move(out);
  }

  std::optional<Section> sub(const char* key) {
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    seen_.insert(key);
    return Section(*it, child(key));
  }

  /// Rejects keys no reader asked for.
  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) throw UsageError(fmt::format("unknown config key '{}'", child(key.c_str())));
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_same_v<T, bool>) return "true or false";
    else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a list of numbers";
  }
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void with(Section& parent, const char* key, F body) {
  if (auto s = parent.sub(key)) {
    body(*s);
    s->finish();
  }
}

void read_profile(Section& s, plant::GaitProfile& p) {
  s.read("stance_fraction", p.stance_fraction);
  s.read("grf_peak", p.grf_peak);
  s.read("grf_baseline", p.grf_baseline);
  s.read("cop_heel", p.cop_heel);
  s.read("cop_toe", p.cop_toe);
  s.read("knee_mean", p.knee_mean);
  s.read("knee_amplitude", p.knee_amplitude);
  s.read("knee_phase", p.knee_phase);
  s.read("amplitude_jitter", p.amplitude_jitter);
}

json profile_json(const plant::GaitProfile& p) {
  return {{"stance_fraction", p.stance_fraction}, {"grf_peak", p.grf_peak},
          {"grf_baseline", p.grf_baseline},       {"cop_heel", p.cop_heel},
          {"cop_toe", p.cop_toe},                 {"knee_mean", p.knee_mean},
          {"knee_amplitude", p.knee_amplitude},   {"knee_phase", p.knee_phase},
          {"amplitude_jitter", p.amplitude_jitter}};
}

template <typename T, typename F>
json names(const std::vector<T>& values, F to_name) {
  json out = json::array();
  for (const auto& v : values) out.push_back(std::string(to_name(v)));
  return out;
}

}  // namespace

void SimulateSpec::validate() const {
  if (tasks.empty()) throw UsageError("simulate.tasks must not be empty");
  for (double s : speeds)
    if (!(s > 0)) throw UsageError(fmt::format("simulate.speeds: bad speed {}", s));
  if (cycles < 1) throw UsageError(fmt::format("simulate.cycles must be >= 1, got {}", cycles));
  if (trials < 1) throw UsageError(fmt::format("simulate.trials must be >= 1, got {}", trials));
  if (!(force_dropout >= 0 && force_dropout <= 1))
    throw UsageError(fmt::format("simulate.force_dropout must lie in [0, 1], got {}", force_dropout));
  if (dropout_blocks < 1)
    throw UsageError(fmt::format("simulate.dropout_blocks must be >= 1, got {}", dropout_blocks));
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.benchmark.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (plant::Task t : {plant::Task::walking, plant::Task::sitting, plant::Task::running})
    c.benchmark.gait[t] = plant::default_profile(t);
  return c;
}

void RunConfig::validate() const {
  simulate.validate();
  try {
    benchmark.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  for (const auto& [task, profile] : benchmark.gait) {
    try {
      profile.validate();
    } catch (const InvalidArgument& e) {
      std::string msg = e.what();
      if (msg.rfind("gait.", 0) == 0) msg.insert(5, fmt::format("{}.", plant::to_string(task)));
      throw UsageError(msg);
    }
  }
}

RunConfig parse_config(const json& document) {
  RunConfig c = RunConfig::defaults();
  auto& b = c.benchmark;
  Section root(document, "");
  root.read("seed", c.seed);
  std::string out = c.out.string();
  root.read("out", out);
  c.out = out;
  with(root, "plant", [&](Section& s) {
    s.read("inertia", b.plant.inertia);
    s.read("damping", b.plant.damping);
    s.read("stiffness", b.plant.stiffness);
    s.read("mass", b.plant.mass);
    s.read("gravity", b.plant.gravity);
    s.read("dt", b.plant.dt);
  });
  with(root, "noise", [&](Section& s) {
    s.read("sigma_gyro", b.noise.sigma_gyro);
    s.read("sigma_accel", b.noise.sigma_accel);
    s.read("sigma_force", b.noise.sigma_force);
    s.read("sigma_knee", b.noise.sigma_knee);
  });
  with(root, "process", [&](Section& s) {
    s.read("theta", b.process.theta);
    s.read("theta_dot", b.process.theta_dot);
    s.read("force", b.process.force);
  });
  with(root, "ukf", [&](Section& s) {
    s.read("alpha", b.ukf.alpha);
    s.read("beta", b.ukf.beta);
    s.read("kappa", b.ukf.kappa);
  });
  root.read("fuse_accel", b.fuse_accel);
  with(root, "gait", [&](Section& s) {
    for (plant::Task t : {plant::Task::walking, plant::Task::sitting, plant::Task::running})
      with(s, std::string(plant::to_string(t)).c_str(), [&](Section& g) { read_profile(g, b.gait[t]); });
  });
  with(root, "simulate", [&](Section& s) {
    s.read_enum_list("tasks", c.simulate.tasks, [](const std::string& v) { return plant::parse_task(v); });
    s.read("speeds", c.simulate.speeds);
    s.read("cycles", c.simulate.cycles);
    s.read("trials", c.simulate.trials);
    s.read("force_dropout", c.simulate.force_dropout);
    s.read("dropout_blocks", c.simulate.dropout_blocks);
  });
  with(root, "network", [&](Section& s) {
    s.read("layers", b.network.layers);
    s.read("units", b.network.units);
    s.read("dropout", b.network.dropout);
    s.read("learning_rate", b.network.learning_rate);
    s.read("window_length", b.network.window_length);
    s.read("decimation", b.network.decimation);
    s.read("variance_head", b.network.variance_head);
  });
  with(root, "train", [&](Section& s) {
    s.read("split", b.train.split);
    s.read("patience", b.train.patience);
    s.read("max_epochs", b.train.max_epochs);
    s.read("batch_size", b.train.batch_size);
    s.read("stride", b.train.stride);
    s.read("loss_lambda", b.train.loss_lambda);
    s.read("clip_norm", b.train.clip_norm);
  });
  with(root, "hybrid", [&](Section& s) {
    s.read("augment", b.hybrid.augment);
    s.read("adapt_noise", b.hybrid.adapt_noise);
    s.read("adapt_inertial", b.hybrid.adapt_inertial);
    s.read("adapt_process", b.hybrid.adapt_process);
    s.read("enforce_bounds", b.hybrid.enforce_bounds);
    s.read("propagate_bounds", b.hybrid.propagate_bounds);
    s.read("lstm_inflation", b.hybrid.lstm_inflation);
    s.read("half_life", b.hybrid.half_life);
    s.read("adapt_gain", b.hybrid.adapt_gain);
    s.read("scale_min", b.hybrid.scale_min);
    s.read("scale_max", b.hybrid.scale_max);
    s.read("warm_start", b.hybrid.warm_start);
    with(s, "bounds", [&](Section& k) {
      k.read("theta_min", b.hybrid.bounds.theta_min);
      k.read("theta_max", b.hybrid.bounds.theta_max);
      k.read("f_min", b.hybrid.bounds.f_min);
    });
  });
  with(root, "benchmark", [&](Section& s) {
    s.read_enum_list("tasks", b.tasks, [](const std::string& v) { return plant::parse_task(v); });
    s.read_enum_list("cases", b.cases, [](const std::string& v) { return eval::parse_case(v); });
    s.read_enum_list("models", b.models, [](const std::string& v) { return eval::parse_model(v); });
    s.read("speeds", b.speeds);
    s.read("seeds", b.seeds);
    s.read("jobs", b.jobs);
    s.read("train_trials", b.train_trials);
    s.read("test_trials", b.test_trials);
    s.read("trial_duration", b.trial_duration);
    s.read("force_dropout", b.force_dropout);
    s.read("dropout_blocks", b.dropout_blocks);
    s.read("report_runtime", b.report_runtime);
  });
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot read config file {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  const auto& b = c.benchmark;
  json gait = json::object();
  for (const auto& [task, p] : b.gait) gait[std::string(plant::to_string(task))] = profile_json(p);
  return {
      {"seed", c.seed},
      {"out", c.out.string()},
      {"plant",
       {{"inertia", b.plant.inertia}, {"damping", b.plant.damping}, {"stiffness", b.plant.stiffness},
        {"mass", b.plant.mass}, {"gravity", b.plant.gravity}, {"dt", b.plant.dt}}},
      {"noise",
       {{"sigma_gyro", b.noise.sigma_gyro}, {"sigma_accel", b.noise.sigma_accel},
        {"sigma_force", b.noise.sigma_force}, {"sigma_knee", b.noise.sigma_knee}}},
      {"process",
       {{"theta", b.process.theta}, {"theta_dot", b.process.theta_dot}, {"force", b.process.force}}},
      {"ukf", {{"alpha", b.ukf.alpha}, {"beta", b.ukf.beta}, {"kappa", b.ukf.kappa}}},
      {"fuse_accel", b.fuse_accel},
      {"gait", gait},
      {"simulate",
       {{"tasks", names(c.simulate.tasks, [](plant::Task t) { return plant::to_string(t); })},
        {"speeds", c.simulate.speeds},
        {"cycles", c.simulate.cycles},
        {"trials", c.simulate.trials},
        {"force_dropout", c.simulate.force_dropout},
        {"dropout_blocks", c.simulate.dropout_blocks}}},
      {"network",
       {{"layers", b.network.layers}, {"units", b.network.units}, {"dropout", b.network.dropout},
        {"learning_rate", b.network.learning_rate}, {"window_length", b.network.window_length},
        {"decimation", b.network.decimation}, {"variance_head", b.network.variance_head}}},
      {"train",
       {{"split", b.train.split}, {"patience", b.train.patience}, {"max_epochs", b.train.max_epochs},
        {"batch_size", b.train.batch_size}, {"stride", b.train.stride},
        {"loss_lambda", b.train.loss_lambda}, {"clip_norm", b.train.clip_norm}}},
      {"hybrid",
       {{"augment", b.hybrid.augment},
        {"adapt_noise", b.hybrid.adapt_noise},
        {"adapt_inertial", b.hybrid.adapt_inertial},
        {"adapt_process", b.hybrid.adapt_process},
        {"enforce_bounds", b.hybrid.enforce_bounds},
        {"propagate_bounds", b.hybrid.propagate_bounds},
        {"lstm_inflation", b.hybrid.lstm_inflation},
        {"half_life", b.hybrid.half_life},
        {"adapt_gain", b.hybrid.adapt_gain},
        {"scale_min", b.hybrid.scale_min},
        {"scale_max", b.hybrid.scale_max},
        {"warm_start", b.hybrid.warm_start},
        {"bounds",
         {{"theta_min", b.hybrid.bounds.theta_min},
          {"theta_max", b.hybrid.bounds.theta_max},
          {"f_min", b.hybrid.bounds.f_min}}}}},
      {"benchmark",
       {{"tasks", names(b.tasks, [](plant::Task t) { return plant::to_string(t); })},
        {"cases", names(b.cases, [](eval::CaseId id) { return eval::to_string(id); })},
        {"models", names(b.models, [](eval::ModelKind m) { return eval::model_key(m); })},
        {"speeds", b.speeds},
        {"seeds", b.seeds},
        {"jobs", b.jobs},
        {"train_trials", b.train_trials},
        {"test_trials", b.test_trials},
        {"trial_duration", b.trial_duration},
        {"force_dropout", b.force_dropout},
        {"dropout_blocks", b.dropout_blocks},
        {"report_runtime", b.report_runtime}}},
  };
}

std::vector<plant::Task> parse_task_list(const std::string& list) {
  std::vector<plant::Task> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) {
      try {
        out.push_back(plant::parse_task(item));
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
  if (out.empty()) throw UsageError("--tasks needs at least one task");
  return out;
}

}  // namespace prosthestim::cli
