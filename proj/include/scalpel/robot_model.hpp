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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalpel/geometry.hpp"

namespace scalpel {

class ThreadPool;

enum class JointKind { Revolute, Prismatic, Fixed };

std::string to_string(JointKind kind);

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::Revolute;
  Eigen::Vector3d axis{0.0, 0.0, 1.0};          // unit, in the parent joint frame
  Eigen::Vector3d origin_translation{0.0, 0.0, 0.0};
  Eigen::Quaterniond origin_rotation{1.0, 0.0, 0.0, 0.0};
  double limit_lo = 0.0;                        // rad (revolute) or m (prismatic)
  double limit_hi = 0.0;
  double velocity_limit = 0.0;                  // rad/s or m/s
  double effort_limit = 0.0;                    // N*m or N
};

// Immutable kinematic chain, base to tip. Safe to share across threads after
// load; every operation below is a pure function of (model, q).
struct RobotModel {
  std::string name;
  int format_version = 1;
  std::vector<JointSpec> joints;                // document order
  Pose tool_tip_offset;                         // last link frame -> end-effector point
  std::optional<int> jaw_joint;                 // joint index of the jaw DoF (PSM)

  int dof_count = 0;                            // count of non-Fixed joints
  std::vector<int> dof_to_joint;                // DoF index -> joint index

  const JointSpec& dof_joint(int dof) const { return joints[dof_to_joint[dof]]; }
  std::optional<int> jaw_dof() const;           // DoF index of the jaw, if any

  Eigen::VectorXd mid_configuration() const;    // center of every joint range
};

// Parses the versioned robot-description format (see docs/formats.md).
// Throws ParseError with origin:line on syntax errors and ConfigError when a
// joint violates its invariants (the message names the joint).
RobotModel parse_robot(std::string_view text, const std::string& origin);
RobotModel load_robot(const std::string& path);
std::string serialize_robot(const RobotModel& model);

// Bundled descriptors compiled into the library: "psm", "ecm", "star".
std::vector<std::string> builtin_robot_names();
// Accepts a builtin name or a filesystem path.
RobotModel resolve_robot(const std::string& name_or_path);

// End-effector pose from sequential joint transform composition plus the
// tool-tip offset. q must have dof_count entries, each inside its limits.
Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q);

// Row-wise forward_kinematics; bitwise-equal to per-row scalar calls for any
// batch size or worker count.
std::vector<Pose> forward_kinematics_batch(const RobotModel& model, const MatrixXdR& q_batch,
                                           ThreadPool* pool = nullptr);
void forward_kinematics_batch(const RobotModel& model, const MatrixXdR& q_batch,
                              std::span<Pose> out, ThreadPool* pool = nullptr);

// Positional tip Jacobian (3 x dof), geometric method: revolute columns are
// axis x (p_tip - joint_origin), prismatic columns are the world-frame axis.
Eigen::Matrix<double, 3, Eigen::Dynamic> tip_jacobian(const RobotModel& model,
                                                      const Eigen::VectorXd& q);

}  // namespace scalpel
