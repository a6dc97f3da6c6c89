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
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace prosthestim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold (non-finite value, bad range, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// The plant left its physical range during integration.
class SimulationDiverged : public Error {
public:
  SimulationDiverged(const std::string& what, std::size_t step_index)
      : Error(what), step_index_(step_index) {}
  std::size_t step_index() const noexcept { return step_index_; }

private:
  std::size_t step_index_;
};

/// Cholesky failed even after symmetrization and jitter.
class CovarianceNotPsd : public Error {
public:
  CovarianceNotPsd(const std::string& what, Eigen::MatrixXd matrix)
      : Error(what), matrix_(std::move(matrix)) {}
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

private:
  Eigen::MatrixXd matrix_;
};

/// Innovation covariance cannot be inverted.
class SingularInnovation : public Error {
public:
  SingularInnovation(const std::string& what, double condition_number)
      : Error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

private:
  double condition_number_;
};

/// A non-finite activation appeared inside the network.
class NumericOverflow : public Error {
public:
  NumericOverflow(const std::string& what, std::size_t layer, std::size_t time_index)
      : Error(what), layer_(layer), time_index_(time_index) {}
  std::size_t layer() const noexcept { return layer_; }
  std::size_t time_index() const noexcept { return time_index_; }

private:
  std::size_t layer_;
  std::size_t time_index_;
};

class TrainingDiverged : public Error {
public:
  TrainingDiverged(const std::string& what, std::size_t epoch) : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::string file, std::size_t row, std::size_t column)
      : Error(what), file_(std::move(file)), row_(row), column_(column) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::string file_;
  std::size_t row_;
  std::size_t column_;
};

/// Configuration document failed validation; `field_path` is dotted, e.g. "plant.dt".
class ConfigError : public Error {
public:
  ConfigError(const std::string& what, std::string field_path)
      : Error(what), field_path_(std::move(field_path)) {}
  const std::string& field_path() const noexcept { return field_path_; }

private:
  std::string field_path_;
};

}  // namespace prosthestim
