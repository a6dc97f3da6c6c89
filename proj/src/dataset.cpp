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

#include "prosthestim/dataset.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "prosthestim/csv.hpp"
#include "prosthestim/error.hpp"
#include "prosthestim/rng.hpp"
#include "prosthestim/sensors.hpp"

namespace prosthestim::eval {

namespace {

constexpr std::size_t kSheetColumns = 10;
constexpr double kDegToRad = std::numbers::pi / 180.0;

bool is_gap(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "nan" || cell == "NaN";
}

/// Columns of one sheet file, gaps as NaN.
std::vector<std::vector<double>> read_sheet(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path, false);
  const std::string where = path.string();
  std::vector<std::vector<double>> columns(kSheetColumns);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.first_data_line + r;
    if (row.size() != kSheetColumns)
      throw ParseError(fmt::format("{}:{}: ragged layout, expected {} columns, found {}", where,
                                   line, kSheetColumns, row.size()),
                       where, line, std::min(row.size(), kSheetColumns) + 1);
    if (r == 0) {
      bool all_text = true;
      for (const auto& cell : row) all_text = all_text && !is_gap(cell) && !csv::parse_number(cell);
      if (all_text) continue;
    }
    for (std::size_t c = 0; c < kSheetColumns; ++c) {
      if (is_gap(row[c])) {
        columns[c].push_back(std::nan(""));
        continue;
      }
      const auto v = csv::parse_number(row[c]);
      if (!v)
        throw ParseError(fmt::format("{}:{}:{}: non-numeric cell '{}'", where, line, c + 1, row[c]),
                         where, line, c + 1);
      columns[c].push_back(*v);
    }
  }
  if (columns.front().empty()) throw ParseError(fmt::format("{}: no data rows", where), where, 0, 0);
  return columns;
}

void fill_gaps(std::vector<double>& v, const std::string& what) {
  std::size_t first = v.size();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isnan(v[i])) {
      first = i;
      break;
    }
  if (first == v.size()) throw InvalidArgument(fmt::format("{} has no numeric values", what));
  for (std::size_t i = 0; i < first; ++i) v[i] = v[first];
  std::size_t last = first;
  for (std::size_t i = first + 1; i < v.size(); ++i) {
    if (std::isnan(v[i])) continue;
    for (std::size_t j = last + 1; j < i; ++j)
      v[j] = v[last] + (v[i] - v[last]) * static_cast<double>(j - last) /
                           static_cast<double>(i - last);
    last = i;
  }
  for (std::size_t i = last + 1; i < v.size(); ++i) v[i] = v[last];
}

std::vector<double> normalise_length(std::vector<double> v) {
  if (v.size() % kCyclePoints == 0) return v;
  const std::array<std::size_t, 2> bounds{0, v.size() - 1};
  return resample_cycle(v, bounds);
}

}  // namespace

std::size_t TrialDataset::length() const {
  return channels.empty() ? 0 : channels.begin()->second.size();
}

void TrialDataset::validate() const {
  const std::size_t n = length();
  if (n == 0 || n % kCyclePoints != 0)
    throw InvalidArgument(fmt::format("trial {}/{}: length {} is not a positive multiple of {}",
                                      subject_id, trial_index, n, kCyclePoints));
  for (const auto& [name, series] : channels) {
    if (series.size() != n)
      throw InvalidArgument(fmt::format("trial {}/{}: channel {} has {} samples, expected {}",
                                        subject_id, trial_index, name, series.size(), n));
    for (double x : series)
      if (std::isnan(x))
        throw InvalidArgument(
            fmt::format("trial {}/{}: channel {} contains NaN", subject_id, trial_index, name));
  }
}

std::vector<std::string> sheet_file_names() {
  return {"ankle_angle_left.csv", "ankle_angle_right.csv", "GRF_left.csv", "GRF_right.csv"};
}

std::vector<TrialDataset> load_trials(const std::filesystem::path& directory) {
  const auto names = sheet_file_names();
  std::vector<std::string> missing;
  for (const auto& n : names)
    if (!std::filesystem::is_regular_file(directory / n)) missing.push_back(n);
  if (!missing.empty())
    throw Error(fmt::format("{}: missing {} (expected {})", directory.string(),
                            fmt::join(missing, ", "), fmt::join(names, ", ")));

  std::vector<TrialDataset> out;
  for (const std::string side : {"left", "right"}) {
    auto angle = read_sheet(directory / fmt::format("ankle_angle_{}.csv", side));
    auto grf = read_sheet(directory / fmt::format("GRF_{}.csv", side));
    for (std::size_t c = 0; c < kSheetColumns; ++c) {
      TrialDataset t;
      t.subject_id = side;
      t.trial_index = static_cast<int>(c);
      fill_gaps(angle[c], fmt::format("ankle_angle_{} column {}", side, c + 1));
      fill_gaps(grf[c], fmt::format("GRF_{} column {}", side, c + 1));
      std::vector<double> rad = normalise_length(angle[c]);
      for (double& x : rad) x *= kDegToRad;
      t.channels["ankle_angle"] = std::move(rad);
      t.channels["grf"] = normalise_length(grf[c]);
      t.validate();
      out.push_back(std::move(t));
    }
  }
  return out;
}

void write_sheet_csvs(const std::vector<TrialDataset>& trials,
                      const std::filesystem::path& directory) {
  if (trials.size() != 2 * kSheetColumns)
    throw InvalidArgument(
        fmt::format("sheet layout needs {} trials, got {}", 2 * kSheetColumns, trials.size()));
  std::filesystem::create_directories(directory);
  std::vector<std::string> header;
  for (std::size_t c = 1; c <= kSheetColumns; ++c) header.push_back(fmt::format("Sample {}", c));
  for (std::size_t s = 0; s < 2; ++s) {
    const std::string side = s == 0 ? "left" : "right";
    for (const std::string channel : {"ankle_angle", "grf"}) {
      const auto file = channel == "grf" ? fmt::format("GRF_{}.csv", side)
                                         : fmt::format("ankle_angle_{}.csv", side);
      const double scale = channel == "grf" ? 1.0 : 1.0 / kDegToRad;
      csv::Writer w(directory / file, header);
      const std::size_t rows = trials[s * kSheetColumns].channels.at(channel).size();
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> row;
        for (std::size_t c = 0; c < kSheetColumns; ++c)
          row.push_back(scale * trials[s * kSheetColumns + c].channels.at(channel).at(r));
        w.numbers(row);
      }
    }
  }
}

std::vector<TrialDataset> full_scale_dataset(std::uint64_t seed) {
  std::vector<TrialDataset> out;
  for (std::size_t s = 0; s < kSubjects; ++s) {
    const std::uint64_t subject_seed = derive_seed(derive_seed(seed, "subject"), s);
    Rng rng(subject_seed);
    plant::PlantParams p;
    p.mass = rng.uniform(55.0, 95.0);
    const double speed = rng.uniform(1.0, 4.0);
    const plant::GaitProfile profile = plant::walking_profile(speed);
    for (std::size_t k = 0; k < kTrialsPerSubject; ++k) {
      const std::uint64_t trial_seed = derive_seed(subject_seed, k);
      // Two cycles: the first absorbs the start-up transient, the second is kept.
      const auto truth = plant::generate_gait(profile, 2, p, derive_seed(trial_seed, "gait"));
      sensors::NoiseSpec noise;
      noise.seed = derive_seed(trial_seed, "noise");
      const auto frames = sensors::corrupt_trace(truth, noise);
      const std::size_t a = truth.cycle_starts.at(1);
      const std::array<std::size_t, 2> bounds{0, truth.size() - 1 - a};
      auto cycle = [&](auto value) {
        std::vector<double> v;
        for (std::size_t i = a; i < truth.size(); ++i) v.push_back(value(i));
        return resample_cycle(v, bounds);
      };
      TrialDataset t;
      t.subject_id = fmt::format("S{:02}", s + 1);
      t.speed_kmh = speed;
      t.trial_index = static_cast<int>(k);
      t.channels["force_plate"] = cycle([&](std::size_t i) { return frames[i].f_z_meas.value_or(0.0); });
      t.channels["grf"] = cycle([&](std::size_t i) {
        return hybrid::feature_value(hybrid::Feature::grf, frames[i], truth.r_cop[i], p);
      });
      t.channels["knee_angle"] = cycle([&](std::size_t i) { return *frames[i].knee_angle_meas; });
      t.channels["ankle_angle"] = cycle([&](std::size_t i) { return truth.theta[i]; });
      t.channels["ankle_moment"] = cycle([&](std::size_t i) { return truth.tau_ext[i]; });
      t.validate();
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::size_t total_samples(const std::vector<TrialDataset>& trials, std::string_view channel) {
  std::size_t n = 0;
  for (const auto& t : trials) {
    const auto it = t.channels.find(std::string(channel));
    if (it != t.channels.end()) n += it->second.size();
  }
  return n;
}

std::string_view to_string(CaseId id) {
  switch (id) {
    case CaseId::I:
      return "I";
    case CaseId::II:
      return "II";
    case CaseId::III:
      return "III";
    case CaseId::IV:
      return "IV";
  }
  return "IV";
}

CaseId parse_case(std::string_view name) {
  for (CaseId id : {CaseId::I, CaseId::II, CaseId::III, CaseId::IV})
    if (to_string(id) == name) return id;
  throw InvalidArgument(fmt::format("unknown input case '{}' (expected I, II, III or IV)", name));
}

std::vector<hybrid::Feature> CaseSpec::channels() const {
  using hybrid::Feature;
  switch (id) {
    case CaseId::I:
      return {Feature::force_plate, Feature::grf};
    case CaseId::II:
      return {Feature::force_plate, Feature::knee_angle};
    case CaseId::III:
      return {Feature::grf, Feature::knee_angle};
    case CaseId::IV:
      return {Feature::force_plate, Feature::grf, Feature::knee_angle};
  }
  return {};
}

std::vector<hybrid::Feature> CaseSpec::lstm_inputs() const {
  using hybrid::Feature;
  std::vector<Feature> out = channels();
  if (out.front() == Feature::force_plate) out.insert(out.begin() + 1, Feature::force_present);
  out.push_back(Feature::omega);
  out.push_back(Feature::r_cop);
  return out;
}

}  // namespace prosthestim::eval
