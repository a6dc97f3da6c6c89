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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prosthestim/model.hpp"

namespace prosthestim::neural {

struct TrainSpec {
  double split = 0.8;      // fraction of trials, taken as a leading contiguous block
  int patience = 10;
  int max_epochs = 100;
  int batch_size = 32;
  int stride = 1;          // spacing between consecutive training windows
  double loss_lambda = 0.0;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingData {
  std::vector<std::string> input_names;
  std::vector<std::string> target_names;
  std::vector<TrialSeries> trials;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  bool stopped_early = false;
};

struct TrainingResult {
  Model model;  // weights of the best validation epoch
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t clip_events = 0;
};

/// Splits trials into train/validation blocks, fits normalisation on the
/// training block and runs Adam with early stopping. `resume` continues from
/// its weights and normalisation instead of a fresh initialisation.
TrainingResult train(const TrainingData& data, const NetworkConfig& config, const TrainSpec& spec,
                     const std::optional<Model>& resume = std::nullopt);

/// Columns epoch,train_loss,val_loss,lr,stopped_early.
void write_training_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path);

}  // namespace prosthestim::neural
