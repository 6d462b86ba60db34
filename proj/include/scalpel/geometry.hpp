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

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace scalpel {

using MatrixXdR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rigid transform: position + unit quaternion.
struct Pose {
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  Eigen::Quaterniond orientation{1.0, 0.0, 0.0, 0.0};

  static Pose identity() { return Pose{}; }

  // this ∘ other (apply `other` in this pose's frame).
  Pose compose(const Pose& other) const {
    Pose out;
    out.position = position + orientation * other.position;
    out.orientation = orientation * other.orientation;
    return out;
  }

  Eigen::Vector3d transform_point(const Eigen::Vector3d& p) const {
    return position + orientation * p;
  }
};

// Intrinsic Z-Y-X convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Eigen::Quaterniond quat_from_rpy(double roll, double pitch, double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
}

inline Eigen::Vector3d rpy_from_quat(const Eigen::Quaterniond& q) {
  // Returns (roll, pitch, yaw); eulerAngles(2,1,0) yields (yaw, pitch, roll).
  Eigen::Vector3d zyx = q.toRotationMatrix().eulerAngles(2, 1, 0);
  return Eigen::Vector3d(zyx[2], zyx[1], zyx[0]);
}

}  // namespace scalpel
