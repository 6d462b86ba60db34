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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalpel/dynamics.hpp"
#include "scalpel/render.hpp"
#include "scalpel/robot_model.hpp"
#include "scalpel/sim_batch.hpp"
#include "scalpel/spline.hpp"

namespace scalpel {

enum class Task {
  TargetReaching,
  ActiveTracking,
  ImageMatching,
  PathFollowing,
  MultiToolReaching,
};

Task task_from_string(const std::string& s);
std::string to_string(Task task);

struct EnvConfig {
  Task task = Task::TargetReaching;
  int64_t n_envs = 1024;
  int episode_len = 300;
  double goal_sigma = 0.05;        // m; 0.15 for STAR
  double goal_offset_clip = 0.2;   // m; tracking goal box about its spawn
  double reward_scale = -1.0;      // rho < 0
  double path_penalty = 1.0;       // alpha
  double success_radius = 0.005;   // m
  int success_hold = 10;           // consecutive in-radius steps before terminated
  double workspace_radius = 0.0;   // m; 0 -> 3 * goal_sigma
  double waypoint_spacing = 0.02;  // m
  double tracking_vel_noise_std = 0.01;  // m/step, per axis
  double tracking_vel_clamp = 0.01;      // m/step
  double collision_threshold = 0.01;     // m, tip-tip
  double collision_penalty = 1.0;
  double view_penalty = 0.1;       // trimanual ECM off-axis penalty, per radian
  std::vector<Pose> tool_bases;    // empty -> defaults
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Per-task vectorized state; which fields are active depends on the task.
struct TaskState {
  MatrixXdR goals;       // N x 3T
  MatrixXdR goal_vel;    // N x 3 (tracking)
  MatrixXdR goal_spawn;  // N x 3 (tracking clip anchor)
  std::vector<CubicSpline3> splines;                 // per env (path)
  std::vector<std::vector<Eigen::Vector3d>> waypoints;
  std::vector<int32_t> waypoint_idx;
  MatrixXdR target_images;                           // N x w*h (image matching)
  std::vector<std::vector<SceneSphere>> scenes;      // per env (image matching)
  std::vector<Pose> target_cameras;                  // per env (image matching)
  MatrixXdR current_images;                          // N x w*h scratch
  std::vector<int32_t> step_count;
  std::vector<int64_t> episode_count;
  std::vector<int32_t> hold_count;
};

struct StepResult {
  MatrixXdR observations;  // N x obs_dim; ended rows already re-observed post-reset
  Eigen::VectorXd rewards;
  std::vector<uint8_t> terminated;  // goal criterion met
  std::vector<uint8_t> timed_out;   // step counter hit episode_len
  MatrixXdR terminal_observations;  // pre-reset observations, valid on ended rows
  int64_t action_saturations = 0;
};

struct ObservationLayout {
  struct Field {
    std::string name;
    int offset = 0;
    int length = 0;
  };
  std::vector<Field> fields;
  int dim = 0;

  const Field* find(const std::string& name) const;
};

// Minimum pairwise tip distance; call with >= 2 poses.
double multi_tool_min_separation(std::span<const Pose> tips);

// Batched-environment surface the trainer and bench harness consume.
class BatchedEnv {
 public:
  virtual ~BatchedEnv() = default;
  virtual int64_t n_envs() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual const MatrixXdR& reset() = 0;
  virtual const StepResult& step(const Eigen::Ref<const MatrixXdR>& actions) = 0;
  // Current task error per env (meters for distance tasks, mean absolute
  // pixel difference for image matching).
  virtual const Eigen::VectorXd& task_error() const = 0;
};

// The five tasks over one or more SimBatches. Rows are independent; all
// per-env randomness comes from the row's own stream, so stepping is
// reproducible for any worker count.
class VecTaskEnv : public BatchedEnv {
 public:
  VecTaskEnv(EnvConfig cfg, std::vector<RobotModel> models, DynamicsConfig dyn_template,
             RenderConfig render_cfg, ThreadPool* pool = nullptr);

  int64_t n_envs() const override { return cfg_.n_envs; }
  int obs_dim() const override { return layout_.dim; }
  int action_dim() const override { return action_dim_; }

  const MatrixXdR& reset() override;
  const StepResult& step(const Eigen::Ref<const MatrixXdR>& actions) override;
  const Eigen::VectorXd& task_error() const override { return task_error_; }

  const EnvConfig& config() const { return cfg_; }
  const ObservationLayout& layout() const { return layout_; }
  const TaskState& task_state() const { return state_; }
  int tool_count() const { return static_cast<int>(models_.size()); }
  const RobotModel& model(int tool) const { return models_[tool]; }
  const SimBatch& sim(int tool = 0) const { return sims_[tool]; }
  SimBatch& mutable_sim(int tool = 0) { return sims_[tool]; }
  const DynamicsConfig& dynamics_config(int tool = 0) const { return dyn_[tool]; }
  const Pose& tool_base(int tool) const { return tool_bases_[tool]; }
  // Reachable-workspace ball for goal sampling, in world frame.
  Eigen::Vector3d workspace_center(int tool) const { return workspace_centers_[tool]; }
  double workspace_radius() const { return workspace_radius_; }
  // World-frame tip pose of `tool` in env `row` for the current state.
  Pose tip_pose(int tool, int64_t row) const;

 private:
  void reset_row(int64_t row);
  void observe_rows(const std::vector<int64_t>& rows, MatrixXdR& dst);
  void observe_all(MatrixXdR& dst);
  void refresh_tips(int64_t row);
  Eigen::Vector3d sample_goal(Pcg32& rng, const Eigen::Vector3d& center) const;
  void sample_path(int64_t row);
  void sample_scene(int64_t row);
  void render_row(int64_t row);

  EnvConfig cfg_;
  std::vector<RobotModel> models_;
  std::vector<DynamicsConfig> dyn_;
  RenderConfig render_cfg_;
  ThreadPool* pool_;

  std::vector<SimBatch> sims_;
  std::vector<Pose> tool_bases_;
  std::vector<Eigen::Vector3d> workspace_centers_;
  double workspace_radius_ = 0.0;
  int action_dim_ = 0;
  ObservationLayout layout_;

  TaskState state_;
  std::vector<std::vector<Pose>> tips_;  // [tool][row], world frame
  Eigen::VectorXd task_error_;
  StepResult result_;
  std::vector<int64_t> ended_rows_;
};

// Default base placements: single tool at the origin; two tools offset
// left/right; a third (camera) tool behind the scene pitched toward it.
std::vector<Pose> default_tool_bases(size_t n_tools, double workspace_radius);

}  // namespace scalpel
