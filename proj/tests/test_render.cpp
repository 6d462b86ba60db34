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
#include "scalpel/render.hpp"

using namespace scalpel;

namespace {

// Camera at origin looking along -z (the renderer's optical axis).
Pose default_camera() { return Pose{}; }

std::pair<double, double> brightness_centroid(const std::vector<double>& img, int w, int h) {
  double sx = 0.0, sy = 0.0, total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = img[y * w + x];
      sx += v * (x + 0.5);
      sy += v * (y + 0.5);
      total += v;
    }
  }
  return {sx / total, sy / total};
}

}  // namespace

TEST_CASE("on-axis sphere is brightest at the image center") {
  RenderConfig cfg;
  cfg.scene.push_back({Eigen::Vector3d(0.0, 0.0, -0.5), 0.08, 1.0});
  auto img = render(default_camera(), cfg);
  int best = 0;
  for (size_t k = 1; k < img.size(); ++k) {
    if (img[k] > img[best]) best = static_cast<int>(k);
  }
  const int bx = best % cfg.width, by = best / cfg.width;
  CHECK(std::abs(bx - cfg.width / 2) <= 1);
  CHECK(std::abs(by - cfg.height / 2) <= 1);
  CHECK(img[best] > 0.9);  // headlight hits the facing pole straight on
}

TEST_CASE("empty frustum renders all background") {
  RenderConfig cfg;
  cfg.scene.push_back({Eigen::Vector3d(0.0, 0.0, +0.5), 0.05, 1.0});  // behind the camera
  auto img = render(default_camera(), cfg);
  for (double v : img) REQUIRE(v == 0.0);
}

TEST_CASE("lateral camera shift moves the centroid by f*d/z pixels") {
  RenderConfig cfg;
  cfg.width = 64;
  cfg.height = 64;
  const double z = 0.6;
  cfg.scene.push_back({Eigen::Vector3d(0.0, 0.0, -z), 0.05, 1.0});

  auto img0 = render(default_camera(), cfg);
  const double d = 0.04;
  Pose shifted;
  shifted.position = Eigen::Vector3d(d, 0.0, 0.0);
  auto img1 = render(shifted, cfg);

  auto [cx0, cy0] = brightness_centroid(img0, cfg.width, cfg.height);
  auto [cx1, cy1] = brightness_centroid(img1, cfg.width, cfg.height);

  const double f = 0.5 * cfg.width / std::tan(0.5 * cfg.fov);  // pinhole oracle
  const double expected_shift = f * d / z;
  CHECK(std::abs((cx0 - cx1) - expected_shift) < 1.0);
  CHECK(std::abs(cy1 - cy0) < 0.5);
}

TEST_CASE("symmetric scene renders exactly mirror-symmetric") {
  RenderConfig cfg;
  cfg.scene.push_back({Eigen::Vector3d(0.12, 0.03, -0.5), 0.06, 0.8});
  cfg.scene.push_back({Eigen::Vector3d(-0.12, 0.03, -0.5), 0.06, 0.8});
  cfg.scene.push_back({Eigen::Vector3d(0.0, -0.08, -0.4), 0.05, 1.0});
  auto img = render(default_camera(), cfg);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      REQUIRE(img[y * cfg.width + x] == img[y * cfg.width + (cfg.width - 1 - x)]);
    }
  }
}

TEST_CASE("pixels stay in [0,1] and renders are deterministic") {
  RenderConfig cfg;
  cfg.scene.push_back({Eigen::Vector3d(0.05, -0.02, -0.3), 0.1, 0.9});
  cfg.scene.push_back({Eigen::Vector3d(-0.1, 0.1, -0.7), 0.2, 0.4});
  Pose cam;
  cam.position = Eigen::Vector3d(0.02, 0.01, 0.05);
  cam.orientation = quat_from_rpy(0.1, -0.2, 0.3);
  auto a = render(cam, cfg);
  auto b = render(cam, cfg);
  CHECK(a == b);
  for (double v : a) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("nearest sphere wins") {
  RenderConfig cfg;
  cfg.scene.push_back({Eigen::Vector3d(0.0, 0.0, -0.8), 0.2, 0.2});  // far, dim
  cfg.scene.push_back({Eigen::Vector3d(0.0, 0.0, -0.3), 0.05, 1.0});  // near, bright
  auto img = render(default_camera(), cfg);
  const int cx = cfg.width / 2, cy = cfg.height / 2;
  CHECK(img[cy * cfg.width + cx] > 0.9);
}

TEST_CASE("config validation rejects bad parameters") {
  RenderConfig cfg;
  cfg.width = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.width = 32;
  cfg.near = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.near = 0.01;
  cfg.scene.push_back({Eigen::Vector3d::Zero(), 0.1, 1.5});
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
