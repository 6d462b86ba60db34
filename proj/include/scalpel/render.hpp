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

#include <span>
#include <string>
#include <vector>

#include "scalpel/geometry.hpp"

namespace scalpel {

struct SceneSphere {
  Eigen::Vector3d center{0, 0, 0};
  double radius = 0.01;
  double albedo = 1.0;  // in [0, 1]
};

struct RenderConfig {
  int width = 32;
  int height = 32;
  double fov = 1.0471975511965976;  // horizontal, radians (60 deg)
  double near = 0.005;
  double far = 2.0;
  std::vector<SceneSphere> scene;

  void validate() const;  // throws ConfigError
};

// Pinhole camera at `camera.position`; the optical axis is the camera
// frame's -z, +x is image right, +y is image up. Each pixel casts one ray;
// the nearest sphere hit is shaded with a Lambertian term against a
// headlight at the camera. Background is 0. Pure and deterministic.
//
// `out` receives width*height values in [0, 1], row-major, top row first.
void render(const Pose& camera, const RenderConfig& cfg, std::span<const SceneSphere> scene,
            std::span<double> out);

// Renders cfg.scene into a fresh buffer.
std::vector<double> render(const Pose& camera, const RenderConfig& cfg);

// Portable graymap (P2) dump for debugging.
void write_pgm(const std::string& path, std::span<const double> pixels, int width, int height);

}  // namespace scalpel
