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
#include <random>
#include <string_view>
#include <vector>

namespace prosthestim {

/// SplitMix64 output function (Steele, Lea, Flood 2014). Advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Seed for a named substream. Mixes the FNV-1a hash of `name` into the
/// master seed with two SplitMix64 rounds.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Portable random source.
///
/// Engine: std::mt19937_64 (fully specified by the standard).
/// uniform(): top 53 bits of one engine draw, scaled by 2^-53, in [0, 1).
/// normal(): Box-Muller on (1 - u1, u2); the sine branch is cached and
///           returned by the next call.
/// below(n): rejection sampling on the raw 64-bit draw, no modulo bias.
///
/// Everything above is defined in terms of engine output only, so streams are
/// identical on any conforming standard library. std::normal_distribution and
/// std::shuffle are avoided for that reason.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace prosthestim
