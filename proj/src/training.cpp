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

#include "prosthestim/training.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "prosthestim/csv.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/optim.hpp"

namespace prosthestim::neural {

namespace {

constexpr std::size_t kEvalBatch = 512;

struct WindowRef {
  std::size_t trial;
  Eigen::Index end;
};

struct Batch {
  Sequence x;
  Eigen::MatrixXd y;
};

Batch gather(const std::vector<Eigen::MatrixXd>& inputs, const std::vector<Eigen::MatrixXd>& targets,
             std::span<const WindowRef> refs, const NetworkConfig& c) {
  const auto b = static_cast<Eigen::Index>(refs.size());
  Batch out;
  out.x.assign(static_cast<std::size_t>(c.window_length), Eigen::MatrixXd(c.input_channels, b));
  out.y.resize(c.output_dims, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& r = refs[static_cast<std::size_t>(j)];
    const auto& in = inputs[r.trial];
    for (Eigen::Index k = 0; k < c.window_length; ++k)
      out.x[static_cast<std::size_t>(k)].col(j) = in.col(window_column(r.end, k, c));
    out.y.col(j) = targets[r.trial].col(r.end);
  }
  return out;
}

std::vector<WindowRef> windows_of(const std::vector<Eigen::MatrixXd>& inputs, std::size_t begin,
                                  std::size_t end, const NetworkConfig& c, int stride) {
  std::vector<WindowRef> refs;
  for (std::size_t k = begin; k < end; ++k)
    for (Eigen::Index t = first_predictable(c); t < inputs[k].cols(); t += stride)
      refs.push_back({k, t});
  return refs;
}

}  // namespace

void TrainSpec::validate() const {
  if (!(split > 0 && split < 1))
    throw InvalidArgument(fmt::format("train.split must lie in (0, 1), got {}", split));
  if (patience < 1) throw InvalidArgument(fmt::format("train.patience must be >= 1, got {}", patience));
  if (max_epochs < 1)
    throw InvalidArgument(fmt::format("train.max_epochs must be >= 1, got {}", max_epochs));
  if (batch_size < 1)
    throw InvalidArgument(fmt::format("train.batch_size must be >= 1, got {}", batch_size));
  if (stride < 1) throw InvalidArgument(fmt::format("train.stride must be >= 1, got {}", stride));
  if (!(loss_lambda >= 0))
    throw InvalidArgument(fmt::format("train.loss_lambda must be >= 0, got {}", loss_lambda));
  if (!(clip_norm > 0))
    throw InvalidArgument(fmt::format("train.clip_norm must be > 0, got {}", clip_norm));
}

TrainingResult train(const TrainingData& data, const NetworkConfig& config, const TrainSpec& spec,
                     const std::optional<Model>& resume) {
  config.validate();
  spec.validate();
  const std::size_t n_trials = data.trials.size();
  if (n_trials < 2)
    throw InvalidArgument(fmt::format("training needs at least 2 trials, got {}", n_trials));
  if (data.input_names.size() != static_cast<std::size_t>(config.input_channels) ||
      data.target_names.size() != static_cast<std::size_t>(config.output_dims))
    throw DimensionMismatch(fmt::format(
        "config expects {} inputs and {} targets, data names {} and {}", config.input_channels,
        config.output_dims, data.input_names.size(), data.target_names.size()));
  for (std::size_t k = 0; k < n_trials; ++k) {
    const auto& tr = data.trials[k];
    if (tr.inputs.rows() != config.input_channels || tr.targets.rows() != config.output_dims ||
        tr.inputs.cols() != tr.targets.cols())
      throw DimensionMismatch(fmt::format("trial {} has inputs {}x{} and targets {}x{}", k,
                                          tr.inputs.rows(), tr.inputs.cols(), tr.targets.rows(),
                                          tr.targets.cols()));
  }
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.split * static_cast<double>(n_trials))), 1,
      n_trials - 1);

  Model model;
  model.input_names = data.input_names;
  model.target_names = data.target_names;
  if (resume) {
    const NetworkConfig& rc = resume->config();
    if (rc.layers != config.layers || rc.units != config.units ||
        rc.input_channels != config.input_channels || rc.output_dims != config.output_dims ||
        rc.variance_head != config.variance_head)
      throw DimensionMismatch("resume model architecture differs from the training config");
    model.network = Network(config, resume->network.params());
    model.input_norm = resume->input_norm;
    model.target_norm = resume->target_norm;
  } else {
    std::vector<Eigen::MatrixXd> in, out;
    for (std::size_t k = 0; k < n_train; ++k) {
      in.push_back(data.trials[k].inputs);
      out.push_back(data.trials[k].targets);
    }
    model.network = Network(config, spec.seed);
    model.input_norm = Normalizer::fit(in);
    model.target_norm = Normalizer::fit(out);
  }

  std::vector<Eigen::MatrixXd> inputs, targets;
  for (const auto& tr : data.trials) {
    inputs.push_back(model.input_norm.apply(tr.inputs));
    targets.push_back(model.target_norm.apply(tr.targets));
  }
  std::vector<WindowRef> train_refs = windows_of(inputs, 0, n_train, config, spec.stride);
  const std::vector<WindowRef> val_refs = windows_of(inputs, n_train, n_trials, config, spec.stride);
  if (train_refs.empty() || val_refs.empty())
    throw InvalidArgument(fmt::format(
        "trials are too short for windows of {} x {} samples", config.window_length,
        config.decimation));

  Network& net = model.network;
  Adam adam({config.learning_rate});
  Rng shuffle_rng(derive_seed(spec.seed, "train.shuffle"));
  Rng dropout_rng(derive_seed(spec.seed, "train.dropout"));
  EarlyStopping stopper(spec.patience);
  TrainingResult result;
  Parameters best = net.params();
  ForwardCache cache;

  for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    shuffle_rng.shuffle(train_refs);
    double train_sum = 0;
    for (std::size_t start = 0; start < train_refs.size();
         start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t count =
          std::min(train_refs.size() - start, static_cast<std::size_t>(spec.batch_size));
      const Batch batch = gather(inputs, targets, {train_refs.data() + start, count}, config);
      const Eigen::MatrixXd out = net.forward(batch.x, Mode::train, &dropout_rng, &cache);
      const LossResult loss = head_loss(out, batch.y, config.variance_head, spec.loss_lambda);
      if (!std::isfinite(loss.value))
        throw TrainingDiverged(fmt::format("training loss is not finite at epoch {}", epoch),
                               static_cast<std::size_t>(epoch));
      Parameters grads = net.backward(cache, loss.grad);
      const double norm = clip_global_norm(grads, spec.clip_norm);
      if (norm > spec.clip_norm) {
        ++result.clip_events;
        spdlog::debug("epoch {}: gradient norm {:.3g} clipped to {}", epoch, norm, spec.clip_norm);
      }
      adam.step(net.params(), grads);
      train_sum += loss.value * static_cast<double>(count);
    }

    double val_sum = 0;
    for (std::size_t start = 0; start < val_refs.size(); start += kEvalBatch) {
      const std::size_t count = std::min(val_refs.size() - start, kEvalBatch);
      const Batch batch = gather(inputs, targets, {val_refs.data() + start, count}, config);
      const Eigen::MatrixXd out = net.forward(batch.x, Mode::eval);
      val_sum += head_loss(out, batch.y, config.variance_head, spec.loss_lambda).value *
                 static_cast<double>(count);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_sum / static_cast<double>(train_refs.size());
    rec.val_loss = val_sum / static_cast<double>(val_refs.size());
    rec.learning_rate = config.learning_rate;
    const bool stop = stopper.update(rec.val_loss);
    if (stopper.improved()) best = net.params();
    rec.stopped_early = stop;
    result.log.push_back(rec);
    spdlog::debug("epoch {}: train {:.6g} val {:.6g}", epoch, rec.train_loss, rec.val_loss);
    if (stop) break;
  }

  net = Network(config, std::move(best));
  result.model = std::move(model);
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  return result;
}

void write_training_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path) {
  csv::Writer w(path, {"epoch", "train_loss", "val_loss", "lr", "stopped_early"});
  for (const auto& r : log)
    w.row({std::to_string(r.epoch), csv::format_number(r.train_loss),
           csv::format_number(r.val_loss), csv::format_number(r.learning_rate),
           r.stopped_early ? "1" : "0"});
}

}  // namespace prosthestim::neural
