// Copyright 2026 The densecap Authors
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

#include <optional>

namespace densecap {

/// Temporal interval in feature timesteps, stored as (center, length).
struct Segment {
  double center = 0.0;
  double length = 1.0;
  std::optional<double> score;

  static Segment from_bounds(double start, double end, std::optional<double> score = {}) {
    return {0.5 * (start + end), end - start, score};
  }
  double start() const { return center - 0.5 * length; }
  double end() const { return center + 0.5 * length; }
};

// Temporal intersection-over-union; 0 for disjoint or touching intervals.
double tiou(const Segment& a, const Segment& b);

}  // namespace densecap
