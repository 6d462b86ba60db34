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

#include "scalpel/render.hpp"

#include <cmath>
#include <fstream>

#include "scalpel/errors.hpp"

namespace scalpel {

void RenderConfig::validate() const {
  if (width < 8 || height < 8) throw ConfigError("render: width and height must be >= 8");
  if (!(near > 0.0) || !(near < far)) throw ConfigError("render: require 0 < near < far");
  if (!(fov > 0.0) || !(fov < 3.1)) throw ConfigError("render: fov must be in (0, pi)");
  for (const auto& s : scene) {
    if (!(s.radius > 0.0)) throw ConfigError("render: sphere radius must be > 0");
    if (s.albedo < 0.0 || s.albedo > 1.0) throw ConfigError("render: albedo must be in [0, 1]");
  }
}

void render(const Pose& camera, const RenderConfig& cfg, std::span<const SceneSphere> scene,
            std::span<double> out) {
  const int w = cfg.width, h = cfg.height;
  if (static_cast<int>(out.size()) != w * h) throw SimError("render: output buffer size mismatch");

  const double f = 0.5 * w / std::tan(0.5 * cfg.fov);  // focal length in pixels
  const Eigen::Matrix3d rot = camera.orientation.toRotationMatrix();
  const Eigen::Vector3d origin = camera.position;

  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double u = (px + 0.5 - 0.5 * w) / f;
      const double v = (py + 0.5 - 0.5 * h) / f;
      Eigen::Vector3d dir_cam(u, -v, -1.0);  // top row looks up
      Eigen::Vector3d dir = (rot * dir_cam).normalized();

      double best_t = cfg.far;
      double value = 0.0;
      for (const auto& s : scene) {
        const Eigen::Vector3d oc = origin - s.center;
        const double b = oc.dot(dir);
        const double disc = b * b - (oc.squaredNorm() - s.radius * s.radius);
        if (disc < 0.0) continue;
        const double t = -b - std::sqrt(disc);
        if (t < cfg.near || t >= best_t) continue;
        best_t = t;
        const Eigen::Vector3d n = (origin + t * dir - s.center) / s.radius;
        const double lambert = n.dot(-dir);
        value = lambert > 0.0 ? s.albedo * lambert : 0.0;
      }
      out[py * w + px] = value;
    }
  }
}

std::vector<double> render(const Pose& camera, const RenderConfig& cfg) {
  std::vector<double> out(static_cast<size_t>(cfg.width) * cfg.height);
  render(camera, cfg, cfg.scene, out);
  return out;
}

void write_pgm(const std::string& path, std::span<const double> pixels, int width, int height) {
  std::ofstream out(path);
  if (!out) throw SimError("cannot write image '" + path + "'");
  out << "P2\n" << width << " " << height << "\n255\n";
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      int g = static_cast<int>(std::lround(255.0 * pixels[y * width + x]));
      out << (g < 0 ? 0 : (g > 255 ? 255 : g)) << (x + 1 == width ? "\n" : " ");
    }
  }
}

}  // namespace scalpel
