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

#include "prosthestim/features.hpp"

#include <array>
#include <utility>

#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::hybrid {

namespace {

constexpr std::array<std::pair<Feature, std::string_view>, 6> kNames{{
    {Feature::force_plate, "force_plate"},
    {Feature::force_present, "force_present"},
    {Feature::grf, "grf"},
    {Feature::knee_angle, "knee_angle"},
    {Feature::omega, "omega"},
    {Feature::r_cop, "r_cop"},
}};

}  // namespace

std::string_view to_string(Feature feature) {
  for (const auto& [f, name] : kNames)
    if (f == feature) return name;
  return "unknown";
}

Feature parse_feature(std::string_view name) {
  for (const auto& [f, n] : kNames)
    if (n == name) return f;
  throw InvalidArgument(fmt::format("unknown input channel '{}'", name));
}

std::vector<std::string> feature_names(const std::vector<Feature>& features) {
  std::vector<std::string> out;
  for (Feature f : features) out.emplace_back(to_string(f));
  return out;
}

std::vector<Feature> parse_features(const std::vector<std::string>& names) {
  std::vector<Feature> out;
  for (const auto& n : names) out.push_back(parse_feature(n));
  return out;
}

std::vector<std::string> target_names() {
  return {std::string(kThetaTarget), std::string(kForceTarget)};
}

double feature_value(Feature feature, const sensors::SensorFrame& frame, double r_cop,
                     const plant::PlantParams& plant) {
  switch (feature) {
    case Feature::force_plate:
      return frame.f_z_meas.value_or(0.0);
    case Feature::force_present:
      return frame.f_z_meas ? 1.0 : 0.0;
    case Feature::grf:
      return plant.mass * (plant.gravity + frame.z_ddot_meas);
    case Feature::knee_angle:
      return frame.knee_angle_meas.value_or(0.0);
    case Feature::omega:
      return frame.omega;
    case Feature::r_cop:
      return r_cop;
  }
  return 0.0;
}

Eigen::VectorXd feature_vector(const std::vector<Feature>& features,
                               const sensors::SensorFrame& frame, double r_cop,
                               const plant::PlantParams& plant) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(features.size()));
  for (std::size_t k = 0; k < features.size(); ++k)
    v(static_cast<Eigen::Index>(k)) = feature_value(features[k], frame, r_cop, plant);
  return v;
}

Eigen::MatrixXd feature_matrix(const std::vector<Feature>& features,
                               const std::vector<sensors::SensorFrame>& frames,
                               const std::vector<double>& r_cop, const plant::PlantParams& plant) {
  if (r_cop.size() != frames.size())
    throw DimensionMismatch(fmt::format("{} frames but {} lever-arm samples", frames.size(),
                                        r_cop.size()));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(features.size()),
                    static_cast<Eigen::Index>(frames.size()));
  for (std::size_t i = 0; i < frames.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = feature_vector(features, frames[i], r_cop[i], plant);
  return m;
}

Eigen::MatrixXd target_matrix(const plant::GroundTruthTrace& truth) {
  const auto n = static_cast<Eigen::Index>(truth.size());
  Eigen::MatrixXd m(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(0, i) = truth.theta[static_cast<std::size_t>(i)];
    m(1, i) = truth.f_grf[static_cast<std::size_t>(i)];
  }
  return m;
}

}  // namespace prosthestim::hybrid
