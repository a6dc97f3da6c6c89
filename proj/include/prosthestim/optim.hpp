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
#include <limits>
#include <span>
#include <vector>

#include "prosthestim/lstm.hpp"

namespace prosthestim::neural {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Adam with bias-corrected moments. Moment buffers are shaped on first use.
class Adam {
public:
  explicit Adam(AdamParams params = {});

  void step(Parameters& params, const Parameters& grads);
  std::size_t steps() const noexcept { return t_; }
  const AdamParams& params() const noexcept { return params_; }

private:
  AdamParams params_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(Parameters& grads, double max_norm);

/// Stops once the monitored loss has gone `patience` epochs without a strict
/// improvement over the best value seen.
class EarlyStopping {
public:
  explicit EarlyStopping(int patience);

  /// Records the loss of the next epoch; returns true when training should stop.
  /// A NaN loss throws TrainingDiverged.
  bool update(double loss);

  int best_epoch() const noexcept { return best_epoch_; }  // 1-based, 0 before any update
  int epochs() const noexcept { return epoch_; }
  double best_loss() const noexcept { return best_; }
  bool improved() const noexcept { return improved_; }
  bool stopped() const noexcept { return stopped_; }

private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
  bool stopped_ = false;
};

}  // namespace prosthestim::neural
