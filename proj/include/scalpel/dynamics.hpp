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

#include <cstdint>
#include <vector>

#include "scalpel/sim_batch.hpp"

namespace scalpel {

class ThreadPool;

enum class ControlMode { Position, Velocity, Torque };

ControlMode control_mode_from_string(const std::string& s);
std::string to_string(ControlMode mode);

// Joint-space decoupled plant: diagonal inertia, viscous damping, PD drives,
// no gravity and no link coupling. Substepped semi-implicit Euler with
// position-level limit projection.
struct DynamicsConfig {
  double control_dt = 0.01;  // seconds per control step
  int substeps = 4;
  ControlMode control_mode = ControlMode::Position;
  Eigen::VectorXd kp;        // per-DoF, N*m/rad or N/m
  Eigen::VectorXd kd;        // per-DoF, N*m*s/rad or N*s/m
  Eigen::VectorXd inertia;   // per-DoF effective inertia, kg*m^2 or kg
  Eigen::VectorXd damping;   // per-DoF viscous coefficient

  void validate(int dof) const;  // throws ConfigError
};

// Critically damped defaults tuned for a ~0.2 s 90% rise time:
// inertia 0.05 (revolute) / 0.5 (prismatic), kp = 380 * inertia,
// kd = 2*sqrt(kp*inertia), damping = 0.1*kd.
DynamicsConfig default_dynamics_config(const RobotModel& model);

struct StepDiagnostics {
  int64_t saturated_actions = 0;  // finite entries clamped into [-1, 1]
};

// Advances every row by one control step. Actions are [-1, 1] and rescaled
// per mode: Position -> PD targets across the joint range (a jaw DoF snaps to
// open/closed), Velocity -> velocity targets, Torque -> direct efforts.
// Non-finite actions and shape mismatches throw SimError. Bitwise
// deterministic for fixed inputs, independent of worker count.
StepDiagnostics step(SimBatch& batch, const Eigen::Ref<const MatrixXdR>& actions,
                     const DynamicsConfig& cfg, const RobotModel& model,
                     ThreadPool* pool = nullptr);

// Masked rows: q uniform in the middle 50% of each joint range (drawn from
// the row's own stream), qdot = 0, q_target = q. Unmasked rows untouched.
void reset_rows(SimBatch& batch, const std::vector<uint8_t>& row_mask, const RobotModel& model);

}  // namespace scalpel
