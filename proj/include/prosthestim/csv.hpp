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

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prosthestim::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// Strict numeric parse: the whole cell must be a finite or "nan" number.
std::optional<double> parse_number(std::string_view cell);

std::vector<std::string> split_line(std::string_view line);

struct Table {
  std::string path;
  std::vector<std::string> header;           // empty when the file has none
  std::vector<std::vector<std::string>> rows;
  std::size_t first_data_line = 1;           // 1-based line number of rows[0]

  std::size_t column_index(std::string_view name) const;  // throws ParseError
  /// Numeric cell with file/row/column coordinates on failure (0-based indices in).
  double number(std::size_t row, std::size_t column) const;
};

/// Reads a comma-separated file. Accepts LF or CRLF. Blank lines are skipped.
Table read(const std::filesystem::path& path, bool has_header);

/// Line-oriented writer that always emits LF endings.
class Writer {
public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void numbers(const std::vector<double>& values);

private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace prosthestim::csv
