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

#include "prosthestim/lstm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::neural {

namespace {

Eigen::MatrixXd sigmoid_of(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                 std::string_view what) {
  if (m.rows() != rows || m.cols() != cols)
    throw DimensionMismatch(
        fmt::format("{} is {}x{}, expected {}x{}", what, m.rows(), m.cols(), rows, cols));
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmLayerWeights LstmLayerWeights::zeros(int input_size, int hidden_size) {
  LstmLayerWeights w;
  w.input_size = input_size;
  w.hidden_size = hidden_size;
  w.w = Eigen::MatrixXd::Zero(4 * hidden_size, hidden_size + input_size);
  w.b = Eigen::VectorXd::Zero(4 * hidden_size);
  return w;
}

void LstmLayerWeights::validate() const {
  if (input_size < 1 || hidden_size < 1)
    throw InvalidArgument(
        fmt::format("LSTM layer sizes must be positive (input {}, hidden {})", input_size,
                    hidden_size));
  check_shape(w, 4 * hidden_size, hidden_size + input_size, "LSTM weight matrix W");
  check_shape(b, 4 * hidden_size, 1, "LSTM bias b");
  if (!w.allFinite() || !b.allFinite())
    throw InvalidArgument("LSTM layer has non-finite weights");
}

LstmCellState cell_step(const Eigen::VectorXd& x, const LstmCellState& prev,
                        const LstmLayerWeights& w, GateValues* gates) {
  const int h = w.hidden_size;
  if (x.size() != w.input_size)
    throw DimensionMismatch(
        fmt::format("input x_t has {} entries but W expects {}", x.size(), w.input_size));
  if (prev.h.size() != h || prev.c.size() != h)
    throw DimensionMismatch(fmt::format("previous state h/C has {}/{} entries but W expects {}",
                                        prev.h.size(), prev.c.size(), h));

  Eigen::VectorXd hx(h + w.input_size);
  hx << prev.h, x;
  const auto pre = [&](Gate g) -> Eigen::VectorXd {
    return w.gate_weights(g) * hx + w.gate_bias(g);
  };
  GateValues v;
  v.f = sigmoid_of(pre(Gate::forget));
  v.i = sigmoid_of(pre(Gate::input));
  v.c_tilde = pre(Gate::candidate).array().tanh().matrix();
  v.o = sigmoid_of(pre(Gate::output));

  LstmCellState next;
  next.c = v.f.cwiseProduct(prev.c) + v.i.cwiseProduct(v.c_tilde);
  next.h = v.o.cwiseProduct(next.c.array().tanh().matrix());
  if (gates) *gates = std::move(v);
  return next;
}

void NetworkConfig::validate() const {
  if (layers < 1) throw InvalidArgument(fmt::format("network.layers must be >= 1, got {}", layers));
  if (units < 1) throw InvalidArgument(fmt::format("network.units must be >= 1, got {}", units));
  if (!(dropout >= 0 && dropout < 1))
    throw InvalidArgument(fmt::format("network.dropout must lie in [0, 1), got {}", dropout));
  if (!(learning_rate > 0))
    throw InvalidArgument(
        fmt::format("network.learning_rate must be > 0, got {}", learning_rate));
  if (window_length < 1)
    throw InvalidArgument(
        fmt::format("network.window_length must be >= 1, got {}", window_length));
  if (decimation < 1)
    throw InvalidArgument(fmt::format("network.decimation must be >= 1, got {}", decimation));
  if (input_channels < 1)
    throw InvalidArgument(
        fmt::format("network.input_channels must be >= 1, got {}", input_channels));
  if (output_dims < 1)
    throw InvalidArgument(fmt::format("network.output_dims must be >= 1, got {}", output_dims));
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  for (const auto& l : layers) z.layers.push_back(LstmLayerWeights::zeros(l.input_size, l.hidden_size));
  z.dense_w = Eigen::MatrixXd::Zero(dense_w.rows(), dense_w.cols());
  z.dense_b = Eigen::VectorXd::Zero(dense_b.size());
  return z;
}

std::vector<std::span<double>> Parameters::views() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.w.data(), static_cast<std::size_t>(l.w.size()));
    out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
  }
  out.emplace_back(dense_w.data(), static_cast<std::size_t>(dense_w.size()));
  out.emplace_back(dense_b.data(), static_cast<std::size_t>(dense_b.size()));
  return out;
}

std::vector<std::span<const double>> Parameters::views() const {
  std::vector<std::span<const double>> out;
  for (auto& v : const_cast<Parameters*>(this)->views()) out.emplace_back(v.data(), v.size());
  return out;
}

std::vector<std::string> Parameters::names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.push_back(fmt::format("lstm{}.w", l));
    out.push_back(fmt::format("lstm{}.b", l));
  }
  out.push_back("dense.w");
  out.push_back("dense.b");
  return out;
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  for (const auto& v : views()) n += v.size();
  return n;
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  const double keep = 1.0 / (1.0 - rate);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

Network::Network(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(seed, "lstm.init"));
  const int h = config_.units;
  for (int l = 0; l < config_.layers; ++l) {
    auto w = LstmLayerWeights::zeros(l == 0 ? config_.input_channels : h, h);
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.w.cols()));
    for (Eigen::Index i = 0; i < w.w.size(); ++i) w.w.data()[i] = rng.uniform(-bound, bound);
    w.gate_bias(Gate::forget).setOnes();
    params_.layers.push_back(std::move(w));
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  params_.dense_w.resize(config_.head_outputs(), h);
  for (Eigen::Index i = 0; i < params_.dense_w.size(); ++i)
    params_.dense_w.data()[i] = rng.uniform(-bound, bound);
  params_.dense_b = Eigen::VectorXd::Zero(config_.head_outputs());
}

Network::Network(const NetworkConfig& config, Parameters params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  if (static_cast<int>(params_.layers.size()) != config_.layers)
    throw DimensionMismatch(fmt::format("network has {} layers but the parameters carry {}",
                                        config_.layers, params_.layers.size()));
  for (int l = 0; l < config_.layers; ++l) {
    const auto& w = params_.layers[static_cast<std::size_t>(l)];
    w.validate();
    if (w.hidden_size != config_.units ||
        w.input_size != (l == 0 ? config_.input_channels : config_.units))
      throw DimensionMismatch(fmt::format("layer {} is {}->{} which does not fit the config", l,
                                          w.input_size, w.hidden_size));
  }
  check_shape(params_.dense_w, config_.head_outputs(), config_.units, "dense weight");
  check_shape(params_.dense_b, config_.head_outputs(), 1, "dense bias");
}

Eigen::MatrixXd Network::forward(const Sequence& x, Mode mode, Rng* dropout_rng,
                                 ForwardCache* cache) const {
  if (x.empty()) throw InvalidArgument("forward: window must contain at least one step");
  const Eigen::Index batch = x.front().cols();
  for (std::size_t t = 0; t < x.size(); ++t)
    check_shape(x[t], config_.input_channels, batch, fmt::format("input at step {}", t));
  const bool drop = mode == Mode::train && config_.dropout > 0;
  if (drop && !dropout_rng) throw InvalidArgument("forward: train mode dropout needs an Rng");
  const auto steps = x.size();
  if (cache) {
    cache->layers.assign(params_.layers.size(), {});
    cache->head_mask.resize(0, 0);
  }

  Sequence current = x;
  for (std::size_t l = 0; l < params_.layers.size(); ++l) {
    const auto& w = params_.layers[l];
    const int h = w.hidden_size;
    const auto w_h = w.w.leftCols(h);
    const auto w_x = w.w.rightCols(w.input_size);
    Eigen::MatrixXd hid = Eigen::MatrixXd::Zero(h, batch);
    Eigen::MatrixXd cell = Eigen::MatrixXd::Zero(h, batch);
    if (cache) cache->layers[l].reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      Eigen::MatrixXd in = std::move(current[t]);
      Eigen::MatrixXd mask;
      if (drop && l > 0) {
        mask = dropout_mask(in.rows(), batch, config_.dropout, *dropout_rng);
        in = in.cwiseProduct(mask);
      }
      Eigen::MatrixXd z = w_h * hid + w_x * in;
      z.colwise() += w.b;
      Eigen::MatrixXd f = sigmoid_of(z.topRows(h));
      Eigen::MatrixXd i = sigmoid_of(z.middleRows(h, h));
      Eigen::MatrixXd g = z.middleRows(2 * h, h).array().tanh().matrix();
      Eigen::MatrixXd o = sigmoid_of(z.bottomRows(h));
      Eigen::MatrixXd c = f.cwiseProduct(cell) + i.cwiseProduct(g);
      Eigen::MatrixXd tanh_c = c.array().tanh().matrix();
      Eigen::MatrixXd h_new = o.cwiseProduct(tanh_c);
      if (!c.allFinite() || !h_new.allFinite())
        throw NumericOverflow(fmt::format("non-finite LSTM activation in layer {} at step {}", l, t),
                              l, t);
      if (cache)
        cache->layers[l].push_back({std::move(in), std::move(mask), hid, cell, std::move(f),
                                    std::move(i), std::move(g), std::move(o), c,
                                    std::move(tanh_c)});
      current[t] = h_new;
      hid = std::move(h_new);
      cell = std::move(c);
    }
  }

  Eigen::MatrixXd top = std::move(current.back());
  if (drop) {
    Eigen::MatrixXd mask = dropout_mask(top.rows(), batch, config_.dropout, *dropout_rng);
    top = top.cwiseProduct(mask);
    if (cache) cache->head_mask = std::move(mask);
  }
  Eigen::MatrixXd out = params_.dense_w * top;
  out.colwise() += params_.dense_b;
  if (!out.allFinite())
    throw NumericOverflow("non-finite network output", params_.layers.size(), steps - 1);
  if (cache) cache->head_input = std::move(top);
  return out;
}

Parameters Network::backward(const ForwardCache& cache, const Eigen::MatrixXd& d_out) const {
  if (cache.layers.size() != params_.layers.size() || cache.layers.front().empty())
    throw InvalidArgument("backward: cache does not come from a forward pass of this network");
  check_shape(d_out, params_.dense_w.rows(), cache.head_input.cols(), "output gradient");

  Parameters grads = params_.zeros_like();
  grads.dense_w = d_out * cache.head_input.transpose();
  grads.dense_b = d_out.rowwise().sum();

  const std::size_t steps = cache.layers.front().size();
  std::vector<Eigen::MatrixXd> dh_above(steps);
  dh_above.back() = params_.dense_w.transpose() * d_out;
  if (cache.head_mask.size() > 0) dh_above.back() = dh_above.back().cwiseProduct(cache.head_mask);

  for (std::size_t l = params_.layers.size(); l-- > 0;) {
    const auto& w = params_.layers[l];
    auto& gw = grads.layers[l];
    const int h = w.hidden_size;
    const Eigen::Index batch = d_out.cols();
    std::vector<Eigen::MatrixXd> dx(l > 0 ? steps : 0);
    Eigen::MatrixXd dh_rec = Eigen::MatrixXd::Zero(h, batch);
    Eigen::MatrixXd dc_rec = Eigen::MatrixXd::Zero(h, batch);
    Eigen::MatrixXd dz(4 * h, batch);
    for (std::size_t t = steps; t-- > 0;) {
      const auto& s = cache.layers[l][t];
      Eigen::MatrixXd dh = dh_rec;
      if (dh_above[t].size() > 0) dh += dh_above[t];
      const Eigen::ArrayXXd tc = s.tanh_c.array();
      const Eigen::ArrayXXd dc =
          dc_rec.array() + dh.array() * s.o.array() * (1.0 - tc.square());
      dz.topRows(h) = (dc * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
      dz.middleRows(h, h) = (dc * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
      dz.middleRows(2 * h, h) = (dc * s.i.array() * (1.0 - s.g.array().square())).matrix();
      dz.bottomRows(h) = (dh.array() * tc * s.o.array() * (1.0 - s.o.array())).matrix();
      dc_rec = (dc * s.f.array()).matrix();

      gw.w.leftCols(h).noalias() += dz * s.h_prev.transpose();
      gw.w.rightCols(w.input_size).noalias() += dz * s.input.transpose();
      gw.b += dz.rowwise().sum();
      dh_rec.noalias() = w.w.leftCols(h).transpose() * dz;
      if (l > 0) {
        dx[t].noalias() = w.w.rightCols(w.input_size).transpose() * dz;
        if (s.mask.size() > 0) dx[t] = dx[t].cwiseProduct(s.mask);
      }
    }
    dh_above = std::move(dx);
  }
  return grads;
}

double kl_diagonal(const Eigen::VectorXd& mu_p, const Eigen::VectorXd& var_p,
                   const Eigen::VectorXd& mu_q, const Eigen::VectorXd& var_q) {
  if (mu_p.size() != var_p.size() || mu_q.size() != mu_p.size() || var_q.size() != mu_p.size())
    throw DimensionMismatch("kl_diagonal: mean and variance sizes differ");
  if ((var_p.array() <= 0).any() || (var_q.array() <= 0).any())
    throw InvalidArgument("kl_diagonal: variances must be positive");
  const Eigen::ArrayXd d = (mu_p - mu_q).array();
  return 0.5 * ((var_q.array() / var_p.array()).log() +
                (var_p.array() + d.square()) / var_q.array() - 1.0)
                   .sum();
}

double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
            const Eigen::MatrixXd& pred_var, const Eigen::VectorXd& prior_mean,
            const Eigen::VectorXd& prior_var, double lambda) {
  check_shape(pred, target.rows(), target.cols(), "prediction");
  if (pred.size() == 0) throw InvalidArgument("loss: empty prediction");
  if (!(lambda >= 0)) throw InvalidArgument(fmt::format("loss: lambda must be >= 0, got {}", lambda));
  double value = (pred - target).squaredNorm() / static_cast<double>(pred.size());
  if (lambda == 0) return value;
  check_shape(pred_var, pred.rows(), pred.cols(), "predicted variance");
  if ((pred_var.array() <= 0).any())
    throw InvalidArgument("loss: predicted variance must be positive when lambda > 0");
  double kl = 0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j)
    kl += kl_diagonal(pred.col(j), pred_var.col(j), prior_mean, prior_var);
  return value + lambda * kl / static_cast<double>(pred.cols());
}

LossResult head_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target,
                     bool variance_head, double lambda) {
  const Eigen::Index dims = target.rows();
  const Eigen::Index batch = target.cols();
  check_shape(output, variance_head ? 2 * dims : dims, batch, "network output");
  const Eigen::MatrixXd diff = output.topRows(dims) - target;
  const double n = static_cast<double>(diff.size());

  LossResult r;
  r.grad = Eigen::MatrixXd::Zero(output.rows(), batch);
  r.value = diff.squaredNorm() / n;
  r.grad.topRows(dims) = 2.0 * diff / n;
  if (variance_head && lambda > 0) {
    const Eigen::ArrayXXd mu = output.topRows(dims).array();
    const Eigen::ArrayXXd log_var = output.bottomRows(dims).array();
    const Eigen::ArrayXXd var = log_var.exp();
    const double b = static_cast<double>(batch);
    r.value += lambda * 0.5 * (var + mu.square() - 1.0 - log_var).sum() / b;
    r.grad.topRows(dims) += (lambda * mu / b).matrix();
    r.grad.bottomRows(dims) = (lambda * 0.5 * (var - 1.0) / b).matrix();
  }
  return r;
}

}  // namespace prosthestim::neural
