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

#include "scalpel/spline.hpp"

#include <cmath>

#include "scalpel/errors.hpp"

namespace scalpel {

namespace {
constexpr int kSubdivisions = 1000;
constexpr double kDegenerateLength = 1e-12;
}  // namespace

double spline_arc_length(const CubicSpline3& spline, int subdivisions) {
  double total = 0.0;
  Eigen::Vector3d prev = spline.eval(spline.t0);
  const double span = spline.t1 - spline.t0;
  for (int k = 1; k <= subdivisions; ++k) {
    Eigen::Vector3d p = spline.eval(spline.t0 + span * k / subdivisions);
    total += (p - prev).norm();
    prev = p;
  }
  return total;
}

std::vector<Eigen::Vector3d> sample_spline_waypoints(const CubicSpline3& spline, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("waypoint spacing must be > 0");
  if (!spline.a.allFinite() || !spline.b.allFinite() || !spline.c.allFinite() ||
      !spline.d.allFinite() || !std::isfinite(spline.t0) || !std::isfinite(spline.t1)) {
    throw ConfigError("spline coefficients must be finite");
  }

  // Cumulative chord-length table over a dense parameter grid.
  const double span = spline.t1 - spline.t0;
  std::vector<double> cum(kSubdivisions + 1, 0.0);
  std::vector<Eigen::Vector3d> pts(kSubdivisions + 1);
  pts[0] = spline.eval(spline.t0);
  for (int k = 1; k <= kSubdivisions; ++k) {
    pts[k] = spline.eval(spline.t0 + span * k / kSubdivisions);
    cum[k] = cum[k - 1] + (pts[k] - pts[k - 1]).norm();
  }
  const double total = cum[kSubdivisions];

  std::vector<Eigen::Vector3d> waypoints;
  waypoints.push_back(pts[0]);
  if (total <= kDegenerateLength) return waypoints;

  int seg = 0;
  for (double s = spacing; s < total - kDegenerateLength; s += spacing) {
    while (seg + 1 < kSubdivisions && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double frac = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    const double t = spline.t0 + span * (seg + frac) / kSubdivisions;
    waypoints.push_back(spline.eval(t));
  }
  waypoints.push_back(pts[kSubdivisions]);
  return waypoints;
}

}  // namespace scalpel
