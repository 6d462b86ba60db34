// Copyright 2026 The Scalpel Authors
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

#include <vector>

#include "scalpel/geometry.hpp"

namespace scalpel {

// One cubic segment: S(t) = a*(t-t0)^3 + b*(t-t0)^2 + c*(t-t0) + d.
struct CubicSpline3 {
  Eigen::Vector3d a{0, 0, 0};
  Eigen::Vector3d b{0, 0, 0};
  Eigen::Vector3d c{0, 0, 0};
  Eigen::Vector3d d{0, 0, 0};
  double t0 = 0.0;
  double t1 = 1.0;

  Eigen::Vector3d eval(double t) const {
    const double u = t - t0;
    return ((a * u + b) * u + c) * u + d;
  }
};

// Waypoints at regular arc-length intervals. Arc length is tabulated from
// 1000 parameter subdivisions with trapezoidal chord sums; both endpoints are
// included. A zero-length spline collapses to the single start point.
// Throws ConfigError for spacing <= 0 or non-finite coefficients.
std::vector<Eigen::Vector3d> sample_spline_waypoints(const CubicSpline3& spline, double spacing);

// Dense chord-sum arc length over the full parameter span.
double spline_arc_length(const CubicSpline3& spline, int subdivisions = 1000);

}  // namespace scalpel
