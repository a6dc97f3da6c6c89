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

#include "prosthestim/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::csv {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  return fmt::format("{}", value);
}

std::optional<double> parse_number(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
    cell.remove_suffix(1);
  if (cell.empty()) return std::nullopt;
  if (cell == "nan" || cell == "NaN") return std::nan("");
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::vector<std::string> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t')) c.pop_back();
    std::size_t lead = 0;
    while (lead < c.size() && (c[lead] == ' ' || c[lead] == '\t')) ++lead;
    c.erase(0, lead);
  }
  return cells;
}

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError(fmt::format("{}: missing column '{}'", path, name), path, 1, 0);
}

double Table::number(std::size_t row, std::size_t column) const {
  const std::size_t line = first_data_line + row;
  if (column >= rows.at(row).size())
    throw ParseError(fmt::format("{}:{}: missing column {}", path, line, column + 1), path, line,
                     column + 1);
  auto v = parse_number(rows[row][column]);
  if (!v)
    throw ParseError(fmt::format("{}:{}:{}: non-numeric cell '{}'", path, line, column + 1,
                                 rows[row][column]),
                     path, line, column + 1);
  return *v;
}

Table read(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()), path.string(), 0, 0);
  Table table;
  table.path = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool header_done = !has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (!header_done) {
      table.header = split_line(line);
      header_done = true;
      continue;
    }
    if (table.rows.empty()) table.first_data_line = line_no;
    table.rows.push_back(split_line(line));
  }
  return table;
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path.string()) {
  if (!out_) throw Error(fmt::format("cannot write '{}'", path_));
  row(header);
}

void Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw Error(fmt::format("write failed on '{}'", path_));
}

void Writer::numbers(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

}  // namespace prosthestim::csv
