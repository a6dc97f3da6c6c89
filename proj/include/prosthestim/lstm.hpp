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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prosthestim/rng.hpp"

namespace prosthestim::neural {

enum class Gate : int { forget = 0, input = 1, candidate = 2, output = 3 };

/// One LSTM layer. The four gate matrices act on the concatenation
/// [h_{t-1}, x_t] and are stored stacked, rows ordered forget, input,
/// candidate, output.
struct LstmLayerWeights {
  int input_size = 0;
  int hidden_size = 0;
  Eigen::MatrixXd w;  // 4H x (H + D)
  Eigen::VectorXd b;  // 4H

  static LstmLayerWeights zeros(int input_size, int hidden_size);

  auto gate_weights(Gate g) { return w.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }
  auto gate_weights(Gate g) const {
    return w.middleRows(static_cast<int>(g) * hidden_size, hidden_size);
  }
  auto gate_bias(Gate g) { return b.segment(static_cast<int>(g) * hidden_size, hidden_size); }
  auto gate_bias(Gate g) const { return b.segment(static_cast<int>(g) * hidden_size, hidden_size); }

  /// Throws DimensionMismatch or InvalidArgument (non-finite entries).
  void validate() const;
};

struct LstmCellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmCellState zeros(int hidden_size) {
    return {Eigen::VectorXd::Zero(hidden_size), Eigen::VectorXd::Zero(hidden_size)};
  }
};

/// Gate activations of one step, kept for inspection.
struct GateValues {
  Eigen::VectorXd f, i, c_tilde, o;
};

double sigmoid(double x);

/// f = s(W_f [h, x] + b_f), i = s(W_i [h, x] + b_i), C~ = tanh(W_C [h, x] + b_C),
/// C = f * C_prev + i * C~, o = s(W_o [h, x] + b_o), h = o * tanh(C).
LstmCellState cell_step(const Eigen::VectorXd& x, const LstmCellState& prev,
                        const LstmLayerWeights& w, GateValues* gates = nullptr);

struct NetworkConfig {
  int layers = 2;
  int units = 50;
  double dropout = 0.2;
  double learning_rate = 1e-3;
  int window_length = 100;  // samples fed per prediction
  int decimation = 1;       // spacing between consecutive window samples
  int input_channels = 1;
  int output_dims = 2;
  /// Adds a log-variance output per target for the KL-regularised loss.
  bool variance_head = false;

  int head_outputs() const { return variance_head ? 2 * output_dims : output_dims; }
  void validate() const;
};

/// Every trainable tensor of a network. Also used for gradients.
struct Parameters {
  std::vector<LstmLayerWeights> layers;
  Eigen::MatrixXd dense_w;  // outputs x H
  Eigen::VectorXd dense_b;

  Parameters zeros_like() const;
  /// Flat views in a fixed order: per layer w then b, then dense_w, dense_b.
  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
  std::vector<std::string> names() const;
  std::size_t size() const;
};

enum class Mode { train, eval };

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// 1 / (1 - rate).
Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

/// Batch of windows, time-major: one D x B matrix per time step.
using Sequence = std::vector<Eigen::MatrixXd>;

/// Activations retained by a training-mode forward pass.
struct ForwardCache {
  struct Step {
    Eigen::MatrixXd input;   // x_t as seen by the layer (after dropout)
    Eigen::MatrixXd mask;    // scaled dropout mask on the input, empty if none
    Eigen::MatrixXd h_prev, c_prev;
    Eigen::MatrixXd f, i, g, o, c, tanh_c;
  };
  std::vector<std::vector<Step>> layers;  // [layer][t]
  Eigen::MatrixXd head_mask;              // scaled mask on the final hidden state, empty if none
  Eigen::MatrixXd head_input;             // final hidden state after dropout
};

class Network {
public:
  Network() = default;
  /// Uniform init in +-1/sqrt(fan_in), forget-gate bias +1.
  Network(const NetworkConfig& config, std::uint64_t seed);
  Network(const NetworkConfig& config, Parameters params);

  const NetworkConfig& config() const noexcept { return config_; }
  Parameters& params() noexcept { return params_; }
  const Parameters& params() const noexcept { return params_; }

  /// Dense head applied to the last hidden state of the top layer. In train
  /// mode inverted dropout is applied to the inputs of every layer above the
  /// first and to the head input, with masks drawn from `dropout_rng`.
  /// Throws NumericOverflow naming layer and time step on non-finite values.
  Eigen::MatrixXd forward(const Sequence& x, Mode mode, Rng* dropout_rng = nullptr,
                          ForwardCache* cache = nullptr) const;

  /// Gradients of sum(d_out .* output) through the cached pass.
  Parameters backward(const ForwardCache& cache, const Eigen::MatrixXd& d_out) const;

private:
  NetworkConfig config_;
  Parameters params_;
};

/// KL(N(mu_p, var_p) || N(mu_q, var_q)) summed over independent dimensions.
double kl_diagonal(const Eigen::VectorXd& mu_p, const Eigen::VectorXd& var_p,
                   const Eigen::VectorXd& mu_q, const Eigen::VectorXd& var_q);

/// Mean squared error over every entry plus lambda times the mean per-sample
/// KL between the predicted Gaussian (mean pred, variance pred_var) and the
/// prior. With lambda = 0 the variances are ignored.
double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
            const Eigen::MatrixXd& pred_var, const Eigen::VectorXd& prior_mean,
            const Eigen::VectorXd& prior_var, double lambda);

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d loss / d head output, same shape as the output
};

/// Loss on a raw head output. Without a variance head it is the MSE. With one,
/// the lower half of the rows holds log-variances and the KL term uses a
/// standard normal prior.
LossResult head_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target,
                     bool variance_head, double lambda);

}  // namespace prosthestim::neural
