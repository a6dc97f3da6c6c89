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

#include "prosthestim/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "prosthestim/csv.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/rng.hpp"

namespace prosthestim::sensors {

void NoiseSpec::validate() const {
  const std::pair<const char*, double> fields[] = {{"noise.sigma_gyro", sigma_gyro},
                                                   {"noise.sigma_accel", sigma_accel},
                                                   {"noise.sigma_force", sigma_force},
                                                   {"noise.sigma_knee", sigma_knee}};
  for (auto [name, value] : fields)
    if (!std::isfinite(value) || value < 0)
      throw InvalidArgument(fmt::format("{} must be finite and >= 0, got {}", name, value));
}

PhaseIntervalSet::PhaseIntervalSet(std::vector<std::pair<double, double>> intervals)
    : intervals_(std::move(intervals)) {
  for (auto [b, e] : intervals_)
    if (!(b >= 0 && b <= 1 && e >= 0 && e <= 1))
      throw InvalidArgument(fmt::format("phase interval [{}, {}) outside [0, 1]", b, e));
}

PhaseIntervalSet PhaseIntervalSet::whole_cycle() { return PhaseIntervalSet({{0.0, 1.0}}); }

PhaseIntervalSet PhaseIntervalSet::random(double fraction, std::size_t count, std::uint64_t seed) {
  if (fraction <= 0 || count == 0) return {};
  if (fraction >= 1) return whole_cycle();
  // Split the circle into `count` equal sectors and drop one block of
  // fraction / count at a random offset inside each; a random rotation is
  // applied to the whole pattern.
  Rng rng(derive_seed(seed, "sensors.dropout"));
  const double sector = 1.0 / static_cast<double>(count);
  const double block = fraction / static_cast<double>(count);
  const double rotation = rng.uniform();
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    double begin = static_cast<double>(k) * sector + rng.uniform() * (sector - block) + rotation;
    begin -= std::floor(begin);
    double end = begin + block;
    end -= std::floor(end);
    out.emplace_back(begin, end);
  }
  return PhaseIntervalSet(std::move(out));
}

bool PhaseIntervalSet::contains(double phase) const {
  for (auto [b, e] : intervals_) {
    if (b <= e ? (phase >= b && phase < e) : (phase >= b || phase < e)) return true;
  }
  return false;
}

double PhaseIntervalSet::measure() const {
  double total = 0;
  for (auto [b, e] : intervals_) total += b <= e ? e - b : 1.0 - b + e;
  return total;
}

std::vector<SensorFrame> corrupt_trace(const plant::GroundTruthTrace& truth,
                                       const NoiseSpec& noise,
                                       const PhaseIntervalSet& force_dropout) {
  noise.validate();
  if (truth.size() == 0) throw InvalidArgument("corrupt_trace needs a non-empty truth trace");
  Rng gyro(derive_seed(noise.seed, "sensors.gyro"));
  Rng accel(derive_seed(noise.seed, "sensors.accel"));
  Rng force(derive_seed(noise.seed, "sensors.force"));
  Rng knee(derive_seed(noise.seed, "sensors.knee"));

  std::vector<SensorFrame> frames;
  frames.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    SensorFrame f;
    f.t = truth.t[i];
    f.omega = truth.theta_dot[i] + noise.sigma_gyro * gyro.normal();
    f.z_ddot_meas = truth.z_ddot[i] + noise.sigma_accel * accel.normal();
    // Draw even when the sample is dropped so dropout does not shift the stream.
    const double force_noise = noise.sigma_force * force.normal();
    if (!force_dropout.contains(truth.phase[i]))
      f.f_z_meas = std::max(0.0, truth.f_grf[i] + force_noise);
    f.knee_angle_meas = truth.knee_angle[i] + noise.sigma_knee * knee.normal();
    frames.push_back(f);
  }
  return frames;
}

Eigen::MatrixXd noise_covariance(const NoiseSpec& noise, const ChannelMask& mask) {
  noise.validate();
  Eigen::VectorXd diag(mask.count());
  int k = 0;
  if (mask.gyro) diag(k++) = noise.sigma_gyro * noise.sigma_gyro;
  if (mask.accel) diag(k++) = noise.sigma_accel * noise.sigma_accel;
  if (mask.force) diag(k++) = noise.sigma_force * noise.sigma_force;
  return diag.asDiagonal();
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
  return v ? csv::format_number(*v) : std::string("NA");
}

std::optional<double> read_optional(const csv::Table& table, std::size_t row, std::size_t col) {
  if (col < table.rows[row].size() && table.rows[row][col] == "NA") return std::nullopt;
  return table.number(row, col);
}

}  // namespace

void write_frames_csv(const std::vector<SensorFrame>& frames, const std::filesystem::path& path) {
  csv::Writer out(path, {"t", "omega", "z_ddot", "f_z", "knee_angle"});
  for (const auto& f : frames)
    out.row({csv::format_number(f.t), csv::format_number(f.omega),
             csv::format_number(f.z_ddot_meas), optional_cell(f.f_z_meas),
             optional_cell(f.knee_angle_meas)});
}

std::vector<SensorFrame> read_frames_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path, true);
  const std::size_t ct = table.column_index("t"), co = table.column_index("omega"),
                    cz = table.column_index("z_ddot"), cf = table.column_index("f_z"),
                    ck = table.column_index("knee_angle");
  std::vector<SensorFrame> frames;
  frames.reserve(table.rows.size());
  double last_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    SensorFrame f;
    f.t = table.number(i, ct);
    if (f.t < last_t)
      throw ParseError(fmt::format("{}:{}: time stamps must be non-decreasing", table.path,
                                   table.first_data_line + i),
                       table.path, table.first_data_line + i, ct + 1);
    last_t = f.t;
    f.omega = table.number(i, co);
    f.z_ddot_meas = table.number(i, cz);
    f.f_z_meas = read_optional(table, i, cf);
    f.knee_angle_meas = read_optional(table, i, ck);
    frames.push_back(f);
  }
  return frames;
}

}  // namespace prosthestim::sensors
