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

#include <cmath>

#include "doctest.h"
#include "scalpel/errors.hpp"
#include "scalpel/rng.hpp"
#include "scalpel/spline.hpp"

using namespace scalpel;

namespace {

// Dense numerical arc length between two waypoints' parameters, used as the
// independent oracle for the spacing property.
double chord_arc_length(const CubicSpline3& s, const Eigen::Vector3d& from,
                        const Eigen::Vector3d& to) {
  // Recover parameters by dense search (the waypoints came from the spline).
  auto param_of = [&](const Eigen::Vector3d& p) {
    double best_t = s.t0, best_d = 1e300;
    for (int k = 0; k <= 20000; ++k) {
      const double t = s.t0 + (s.t1 - s.t0) * k / 20000.0;
      const double d = (s.eval(t) - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best_t = t;
      }
    }
    return best_t;
  };
  const double ta = param_of(from), tb = param_of(to);
  double len = 0.0;
  Eigen::Vector3d prev = s.eval(ta);
  for (int k = 1; k <= 4000; ++k) {
    Eigen::Vector3d p = s.eval(ta + (tb - ta) * k / 4000.0);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

}  // namespace

TEST_CASE("unit-speed straight line samples at exact multiples") {
  CubicSpline3 s;
  s.c = Eigen::Vector3d(1.0, 0.0, 0.0);
  auto wps = sample_spline_waypoints(s, 0.25);
  REQUIRE(wps.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(wps[k].x() == doctest::Approx(0.25 * k).epsilon(1e-6));
    CHECK(wps[k].y() == 0.0);
    CHECK(wps[k].z() == 0.0);
  }
}

TEST_CASE("constant spline collapses to its start point") {
  CubicSpline3 s;
  s.d = Eigen::Vector3d(0.1, -0.2, 0.3);
  auto wps = sample_spline_waypoints(s, 0.05);
  REQUIRE(wps.size() == 1);
  CHECK(wps[0] == s.d);
}

TEST_CASE("waypoints include both endpoints") {
  CubicSpline3 s;
  s.a = Eigen::Vector3d(0.2, -0.1, 0.05);
  s.b = Eigen::Vector3d(-0.3, 0.2, 0.1);
  s.c = Eigen::Vector3d(0.25, 0.15, -0.2);
  s.d = Eigen::Vector3d(1.0, 2.0, 3.0);
  auto wps = sample_spline_waypoints(s, 0.03);
  REQUIRE(wps.size() >= 2);
  CHECK((wps.front() - s.eval(s.t0)).norm() < 1e-12);
  CHECK((wps.back() - s.eval(s.t1)).norm() < 1e-12);
}

TEST_CASE("consecutive waypoint gaps match the spacing within 1%") {
  Pcg32 rng = make_stream(99, 1);
  for (int trial = 0; trial < 20; ++trial) {
    CubicSpline3 s;
    for (int k = 0; k < 3; ++k) {
      s.a[k] = rng.uniform(-0.5, 0.5);
      s.b[k] = rng.uniform(-0.5, 0.5);
      s.c[k] = rng.uniform(-0.3, 0.3);
      s.d[k] = rng.uniform(-0.1, 0.1);
    }
    const double spacing = 0.02;
    auto wps = sample_spline_waypoints(s, spacing);
    REQUIRE(wps.size() >= 3);
    for (size_t i = 0; i + 2 < wps.size(); ++i) {  // final gap may be shorter
      const double len = chord_arc_length(s, wps[i], wps[i + 1]);
      REQUIRE(len == doctest::Approx(spacing).epsilon(0.01));
    }
  }
}

TEST_CASE("spacing and coefficient validation") {
  CubicSpline3 s;
  s.c = Eigen::Vector3d(1, 0, 0);
  CHECK_THROWS_AS(sample_spline_waypoints(s, 0.0), ConfigError);
  CHECK_THROWS_AS(sample_spline_waypoints(s, -1.0), ConfigError);
  s.a[0] = std::nan("");
  CHECK_THROWS_AS(sample_spline_waypoints(s, 0.1), ConfigError);
}

TEST_CASE("arc length of a circle-ish curve agrees with closed form") {
  // Straight segment with quadratic bend; compare against dense integration.
  CubicSpline3 s;
  s.b = Eigen::Vector3d(0.0, 0.4, 0.0);
  s.c = Eigen::Vector3d(1.0, 0.0, 0.0);
  const double len = spline_arc_length(s, 200000);
  // integral of sqrt(1 + (0.8 t)^2) dt, t in [0,1]
  const double expected = 0.5 * (std::sqrt(1.64) + std::asinh(0.8) / 0.8);
  CHECK(len == doctest::Approx(expected).epsilon(1e-6));
}
