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

#include "prosthestim/model.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "prosthestim/error.hpp"

namespace prosthestim::neural {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'S', 'T', 'L', 'S', 'T', 'M', '1'};
constexpr Eigen::Index kPredictBatch = 512;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
}

template <typename T>
T read_le(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw ParseError(fmt::format("{}: truncated model file", path), path, 0, 0);
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

void write_tensor(std::ostream& out, std::span<const double> data) {
  for (double x : data) write_le(out, std::bit_cast<std::uint64_t>(x));
}

void read_tensor(std::istream& in, std::span<double> data, const std::string& path) {
  for (double& x : data) x = std::bit_cast<double>(read_le<std::uint64_t>(in, path));
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Normalizer Normalizer::fit(const std::vector<Eigen::MatrixXd>& series) {
  if (series.empty()) throw InvalidArgument("Normalizer::fit: no data");
  const Eigen::Index rows = series.front().rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(rows);
  double n = 0;
  for (const auto& s : series) {
    if (s.rows() != rows) throw DimensionMismatch("Normalizer::fit: channel counts differ");
    sum += s.rowwise().sum();
    n += static_cast<double>(s.cols());
  }
  if (n < 1) throw InvalidArgument("Normalizer::fit: no samples");
  Normalizer z;
  z.mean = sum / n;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(rows);
  for (const auto& s : series) sq += (s.colwise() - z.mean).rowwise().squaredNorm();
  z.scale = (sq / n).cwiseSqrt();
  for (Eigen::Index i = 0; i < rows; ++i)
    if (!(z.scale(i) > 1e-12 * std::max(1.0, std::abs(z.mean(i))))) z.scale(i) = 1.0;
  return z;
}

Normalizer Normalizer::identity(Eigen::Index channels) {
  return {Eigen::VectorXd::Zero(channels), Eigen::VectorXd::Ones(channels)};
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& raw) const {
  if (raw.rows() != mean.size())
    throw DimensionMismatch(
        fmt::format("normaliser has {} channels, data has {}", mean.size(), raw.rows()));
  return (raw.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd Normalizer::invert(const Eigen::MatrixXd& normalized) const {
  if (normalized.rows() != mean.size())
    throw DimensionMismatch(
        fmt::format("normaliser has {} channels, data has {}", mean.size(), normalized.rows()));
  return (normalized.array().colwise() * scale.array()).matrix().colwise() + mean;
}

Sequence gather_windows(const Eigen::MatrixXd& inputs, const std::vector<Eigen::Index>& ends,
                        const NetworkConfig& config) {
  const Eigen::Index length = config.window_length;
  const auto batch = static_cast<Eigen::Index>(ends.size());
  Sequence seq(static_cast<std::size_t>(length), Eigen::MatrixXd(inputs.rows(), batch));
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index t = ends[static_cast<std::size_t>(b)];
    if (t < first_predictable(config) || t > inputs.cols())
      throw InvalidArgument(fmt::format("window ending before sample {} needs {} samples of history",
                                        t, first_predictable(config)));
    for (Eigen::Index k = 0; k < length; ++k)
      seq[static_cast<std::size_t>(k)].col(b) = inputs.col(window_column(t, k, config));
  }
  return seq;
}

Eigen::MatrixXd Model::predict_series(const Eigen::MatrixXd& inputs) const {
  const NetworkConfig& c = config();
  const Eigen::MatrixXd x = input_norm.apply(inputs);
  const Eigen::Index n = inputs.cols();
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Constant(c.output_dims, n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index start = first_predictable(c); start < n; start += kPredictBatch) {
    std::vector<Eigen::Index> ends;
    for (Eigen::Index t = start; t < std::min(n, start + kPredictBatch); ++t) ends.push_back(t);
    const Eigen::MatrixXd y = network.forward(gather_windows(x, ends, c), Mode::eval);
    out.middleCols(start, static_cast<Eigen::Index>(ends.size())) =
        target_norm.invert(y.topRows(c.output_dims));
  }
  return out;
}

Eigen::VectorXd Model::predict_window(const Eigen::MatrixXd& window) const {
  const NetworkConfig& c = config();
  if (window.cols() != c.window_length || window.rows() != c.input_channels)
    throw DimensionMismatch(fmt::format("window is {}x{}, model expects {}x{}", window.rows(),
                                        window.cols(), c.input_channels, c.window_length));
  const Eigen::MatrixXd x = input_norm.apply(window);
  Sequence seq;
  for (Eigen::Index k = 0; k < window.cols(); ++k) seq.emplace_back(x.col(k));
  const Eigen::MatrixXd y = network.forward(seq, Mode::eval);
  return target_norm.invert(y.topRows(c.output_dims)).col(0);
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const NetworkConfig& c = model.config();
  const Parameters& p = model.network.params();
  nlohmann::json header;
  header["format"] = "prosthestim-lstm";
  header["config"] = {{"layers", c.layers},
                      {"units", c.units},
                      {"dropout", c.dropout},
                      {"learning_rate", c.learning_rate},
                      {"window_length", c.window_length},
                      {"decimation", c.decimation},
                      {"input_channels", c.input_channels},
                      {"output_dims", c.output_dims},
                      {"variance_head", c.variance_head}};
  header["inputs"] = model.input_names;
  header["targets"] = model.target_names;
  header["input_norm"] = {{"mean", to_json(model.input_norm.mean)},
                          {"scale", to_json(model.input_norm.scale)}};
  header["target_norm"] = {{"mean", to_json(model.target_norm.mean)},
                           {"scale", to_json(model.target_norm.scale)}};
  const auto names = p.names();
  const auto views = p.views();
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t k = 0; k < names.size(); ++k)
    tensors.push_back({{"name", names[k]}, {"size", views[k].size()}});
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  out.write(kMagic.data(), kMagic.size());
  write_le(out, kModelFormatVersion);
  write_le(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& v : views) write_tensor(out, v);
  if (!out) throw Error(fmt::format("failed writing model to {}", path.string()));
}

Model load_model(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open model file {}", where));
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic)
    throw ParseError(fmt::format("{} is not a prosthestim model file", where), where, 0, 0);
  const auto version = read_le<std::uint32_t>(in, where);
  if (version != kModelFormatVersion)
    throw ParseError(fmt::format("{}: unsupported model format version {}", where, version), where,
                     0, 0);
  const auto length = read_le<std::uint64_t>(in, where);
  if (length > (1u << 26)) throw ParseError(fmt::format("{}: corrupt header length", where), where, 0, 0);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw ParseError(fmt::format("{}: truncated header", where), where, 0, 0);

  Model model;
  try {
    const auto header = nlohmann::json::parse(text);
    const auto& j = header.at("config");
    NetworkConfig c;
    c.layers = j.at("layers").get<int>();
    c.units = j.at("units").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.window_length = j.at("window_length").get<int>();
    c.decimation = j.at("decimation").get<int>();
    c.input_channels = j.at("input_channels").get<int>();
    c.output_dims = j.at("output_dims").get<int>();
    c.variance_head = j.at("variance_head").get<bool>();
    c.validate();

    Parameters p;
    for (int l = 0; l < c.layers; ++l)
      p.layers.push_back(LstmLayerWeights::zeros(l == 0 ? c.input_channels : c.units, c.units));
    p.dense_w = Eigen::MatrixXd::Zero(c.head_outputs(), c.units);
    p.dense_b = Eigen::VectorXd::Zero(c.head_outputs());
    const auto names = p.names();
    auto views = p.views();
    const auto& table = header.at("tensors");
    if (table.size() != names.size())
      throw ParseError(fmt::format("{}: expected {} tensors, header lists {}", where, names.size(),
                                   table.size()),
                       where, 0, 0);
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (table[k].at("name").get<std::string>() != names[k] ||
          table[k].at("size").get<std::size_t>() != views[k].size())
        throw ParseError(fmt::format("{}: tensor {} does not match the config", where, names[k]),
                         where, 0, 0);
      read_tensor(in, views[k], where);
    }
    model.network = Network(c, std::move(p));
    model.input_names = header.at("inputs").get<std::vector<std::string>>();
    model.target_names = header.at("targets").get<std::vector<std::string>>();
    model.input_norm = {vector_from(header.at("input_norm").at("mean")),
                        vector_from(header.at("input_norm").at("scale"))};
    model.target_norm = {vector_from(header.at("target_norm").at("mean")),
                         vector_from(header.at("target_norm").at("scale"))};
    if (model.input_norm.mean.size() != c.input_channels ||
        model.target_norm.mean.size() != c.output_dims)
      throw ParseError(fmt::format("{}: normalisation does not match the config", where), where, 0, 0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: bad model header: {}", where, e.what()), where, 0, 0);
  }
  return model;
}

}  // namespace prosthestim::neural
