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
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prosthestim/features.hpp"
#include "prosthestim/metrics.hpp"

namespace prosthestim::eval {

/// One recording, every channel cycle-normalised to kCyclePoints per cycle.
struct TrialDataset {
  std::string subject_id;
  double speed_kmh = 0.0;
  int trial_index = 0;
  std::map<std::string, std::vector<double>> channels;

  std::size_t length() const;
  std::size_t cycles() const { return length() / kCyclePoints; }
  /// Equal channel lengths, a multiple of kCyclePoints, no NaN. Throws InvalidArgument.
  void validate() const;
};

/// Files expected by load_trials, in this order.
std::vector<std::string> sheet_file_names();

/// Reads ankle_angle_left.csv, ankle_angle_right.csv, GRF_left.csv and
/// GRF_right.csv, each with 10 columns (one recording per column) and an
/// optional header row. Angles are converted from degrees to radians. A
/// column whose length is not a multiple of kCyclePoints is treated as one cycle and
/// resampled. Interior gaps (empty, NA, nan) are filled linearly and edge gaps
/// with the nearest value; an all-gap column is an error.
/// Returns 10 trials with subject "left" then 10 with subject "right", each
/// with channels ankle_angle and grf.
std::vector<TrialDataset> load_trials(const std::filesystem::path& directory);

/// Writes the four sheet files from 20 trials laid out as load_trials returns
/// them (angles written in degrees).
void write_sheet_csvs(const std::vector<TrialDataset>& trials,
                      const std::filesystem::path& directory);

inline constexpr std::size_t kSubjects = 13;
inline constexpr std::size_t kTrialsPerSubject = 7;

/// Synthetic stand-in for the 13-subject walking set: 13 subjects of varying
/// mass and speed, 7 one-cycle trials each, every channel resampled to
/// kCyclePoints points. Channels force_plate, grf, knee_angle, ankle_angle, ankle_moment.
std::vector<TrialDataset> full_scale_dataset(std::uint64_t seed);

/// Samples per channel summed over trials.
std::size_t total_samples(const std::vector<TrialDataset>& trials, std::string_view channel);

enum class CaseId { I, II, III, IV };

std::string_view to_string(CaseId id);
CaseId parse_case(std::string_view name);  // throws InvalidArgument

/// Sensor channel set of an input case:
///   I {force_plate, grf}, II {force_plate, knee_angle},
///   III {grf, knee_angle}, IV {force_plate, grf, knee_angle}.
struct CaseSpec {
  CaseId id = CaseId::IV;

  std::vector<hybrid::Feature> channels() const;
  /// Network inputs: the case channels, force_present when the plate is
  /// among them, then omega and r_cop.
  std::vector<hybrid::Feature> lstm_inputs() const;
};

}  // namespace prosthestim::eval
