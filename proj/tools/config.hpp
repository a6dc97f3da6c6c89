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
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosthestim/benchmark.hpp"

namespace prosthestim::cli {

/// Bad command line or config document; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// What `simulate` writes.
struct SimulateSpec {
  std::vector<plant::Task> tasks{plant::Task::walking};
  std::vector<double> speeds;  // empty: task default
  int cycles = 5;
  int trials = 1;
  double force_dropout = 0.2;
  int dropout_blocks = 2;

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  SimulateSpec simulate;
  /// Also carries plant, noise, process, ukf, network, train, hybrid and gait.
  eval::BenchmarkConfig benchmark;

  static RunConfig defaults();
  /// Throws UsageError naming the offending field path.
  void validate() const;
};

/// Reads a config document over the defaults. Unknown keys and type
/// mismatches are UsageErrors naming the field path.
RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

std::vector<plant::Task> parse_task_list(const std::string& list);

}  // namespace prosthestim::cli
