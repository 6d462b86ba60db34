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

#include "scalpel/envs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "scalpel/errors.hpp"
#include "scalpel/thread_pool.hpp"

namespace scalpel {

namespace {
constexpr int64_t kRowGrain = 256;
constexpr int kGoalRejectionLimit = 1000;

Eigen::VectorXd sample_q_fraction(Pcg32& rng, const RobotModel& model, double fraction) {
  Eigen::VectorXd q(model.dof_count);
  for (int d = 0; d < model.dof_count; ++d) {
    const auto& j = model.dof_joint(d);
    const double margin = 0.5 * (1.0 - fraction) * (j.limit_hi - j.limit_lo);
    q[d] = rng.uniform(j.limit_lo + margin, j.limit_hi - margin);
  }
  return q;
}

}  // namespace

Task task_from_string(const std::string& s) {
  if (s == "target_reaching") return Task::TargetReaching;
  if (s == "active_tracking") return Task::ActiveTracking;
  if (s == "image_matching") return Task::ImageMatching;
  if (s == "path_following") return Task::PathFollowing;
  if (s == "multi_tool_reaching") return Task::MultiToolReaching;
  throw ConfigError("unknown task '" + s +
                    "' (target_reaching|active_tracking|image_matching|path_following|"
                    "multi_tool_reaching)");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::TargetReaching: return "target_reaching";
    case Task::ActiveTracking: return "active_tracking";
    case Task::ImageMatching: return "image_matching";
    case Task::PathFollowing: return "path_following";
    case Task::MultiToolReaching: return "multi_tool_reaching";
  }
  return "?";
}

void EnvConfig::validate() const {
  if (n_envs < 1) throw ConfigError("env.n_envs must be >= 1");
  if (episode_len < 1) throw ConfigError("env.episode_len must be >= 1");
  if (!(goal_sigma > 0.0)) throw ConfigError("env.goal_sigma must be > 0");
  if (!(success_radius > 0.0)) throw ConfigError("env.success_radius must be > 0");
  if (!(reward_scale < 0.0)) throw ConfigError("env.reward_scale (rho) must be < 0");
  if (!(path_penalty > 0.0)) throw ConfigError("env.path_penalty (alpha) must be > 0");
  if (success_hold < 1) throw ConfigError("env.success_hold must be >= 1");
  if (!(goal_offset_clip > 0.0)) throw ConfigError("env.goal_offset_clip must be > 0");
  if (!(waypoint_spacing > 0.0)) throw ConfigError("env.waypoint_spacing must be > 0");
  if (workspace_radius < 0.0) throw ConfigError("env.workspace_radius must be >= 0");
  if (tracking_vel_noise_std < 0.0) throw ConfigError("env.tracking_vel_noise_std must be >= 0");
  if (!(tracking_vel_clamp > 0.0)) throw ConfigError("env.tracking_vel_clamp must be > 0");
  if (collision_threshold < 0.0) throw ConfigError("env.collision_threshold must be >= 0");
  if (collision_penalty < 0.0) throw ConfigError("env.collision_penalty must be >= 0");
  if (view_penalty < 0.0) throw ConfigError("env.view_penalty must be >= 0");
}

const ObservationLayout::Field* ObservationLayout::find(const std::string& name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

double multi_tool_min_separation(std::span<const Pose> tips) {
  if (tips.size() < 2) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < tips.size(); ++i) {
    for (size_t j = i + 1; j < tips.size(); ++j) {
      best = std::min(best, (tips[i].position - tips[j].position).norm());
    }
  }
  return best;
}

std::vector<Pose> default_tool_bases(size_t n_tools, double workspace_radius) {
  std::vector<Pose> bases(n_tools);
  if (n_tools == 1) return bases;
  const double dx = 0.7 * workspace_radius;
  bases[0].position = Eigen::Vector3d(-dx, 0.0, 0.0);
  bases[1].position = Eigen::Vector3d(dx, 0.0, 0.0);
  if (n_tools >= 3) {
    // Camera arm behind the scene, pitched toward it.
    bases[2].position = Eigen::Vector3d(0.0, -2.0 * workspace_radius, 0.5 * workspace_radius);
    bases[2].orientation = quat_from_rpy(0.9, 0.0, 0.0);
  }
  for (size_t t = 3; t < n_tools; ++t) {
    bases[t].position = Eigen::Vector3d(0.0, (static_cast<double>(t) - 1.0) * 2.0 * dx, 0.0);
  }
  return bases;
}

VecTaskEnv::VecTaskEnv(EnvConfig cfg, std::vector<RobotModel> models, DynamicsConfig dyn_template,
                       RenderConfig render_cfg, ThreadPool* pool)
    : cfg_(std::move(cfg)),
      models_(std::move(models)),
      render_cfg_(std::move(render_cfg)),
      pool_(pool) {
  cfg_.validate();
  render_cfg_.validate();
  if (models_.empty()) throw ConfigError("env: at least one robot is required");
  const size_t tools = models_.size();
  if (cfg_.task == Task::MultiToolReaching) {
    if (tools < 2) throw ConfigError("multi_tool_reaching requires >= 2 robots");
  } else if (tools != 1) {
    throw ConfigError(to_string(cfg_.task) + " requires exactly 1 robot");
  }

  workspace_radius_ = cfg_.workspace_radius > 0.0 ? cfg_.workspace_radius : 3.0 * cfg_.goal_sigma;

  tool_bases_ = cfg_.tool_bases.empty() ? default_tool_bases(tools, workspace_radius_)
                                        : cfg_.tool_bases;
  if (tool_bases_.size() != tools) {
    throw ConfigError("env.tool_bases must have one entry per robot");
  }

  for (size_t t = 0; t < tools; ++t) {
    DynamicsConfig dc = dyn_template;
    const DynamicsConfig defaults = default_dynamics_config(models_[t]);
    // Empty gain vectors take the per-robot defaults; a single value
    // broadcasts across the robot's DoFs.
    auto resolve = [&](Eigen::VectorXd& v, const Eigen::VectorXd& fallback) {
      if (v.size() == 0) {
        v = fallback;
      } else if (v.size() == 1) {
        v = Eigen::VectorXd::Constant(models_[t].dof_count, v[0]);
      }
    };
    resolve(dc.kp, defaults.kp);
    resolve(dc.kd, defaults.kd);
    resolve(dc.inertia, defaults.inertia);
    resolve(dc.damping, defaults.damping);
    dc.validate(models_[t].dof_count);
    dyn_.push_back(std::move(dc));
    sims_.push_back(SimBatch::create(models_[t], cfg_.n_envs, cfg_.seed, t));
    Pose mid_tip = forward_kinematics(models_[t], models_[t].mid_configuration());
    workspace_centers_.push_back(tool_bases_[t].transform_point(mid_tip.position));
    action_dim_ += models_[t].dof_count;
  }

  // Observation layout: base fields, then task extras.
  int total_dof = action_dim_;
  const int n_tips = 3 * static_cast<int>(tools);
  int off = 0;
  auto add = [&](const std::string& name, int len) {
    layout_.fields.push_back({name, off, len});
    off += len;
  };
  add("dof_pos", total_dof);
  add("dof_vel", total_dof);
  add("tip_pos", n_tips);
  add("dof_target", total_dof);
  switch (cfg_.task) {
    case Task::TargetReaching:
    case Task::ActiveTracking:
    case Task::MultiToolReaching:
      add("goal", n_tips);
      break;
    case Task::PathFollowing:
      add("waypoint", 3);
      break;
    case Task::ImageMatching:
      add("target_image", render_cfg_.width * render_cfg_.height);
      add("current_image", render_cfg_.width * render_cfg_.height);
      break;
  }
  layout_.dim = off;

  const int64_t n = cfg_.n_envs;
  state_.goals = MatrixXdR::Zero(n, n_tips);
  state_.step_count.assign(n, 0);
  state_.episode_count.assign(n, 0);
  state_.hold_count.assign(n, 0);
  if (cfg_.task == Task::ActiveTracking) {
    state_.goal_vel = MatrixXdR::Zero(n, 3);
    state_.goal_spawn = MatrixXdR::Zero(n, 3);
  }
  if (cfg_.task == Task::PathFollowing) {
    state_.splines.resize(n);
    state_.waypoints.resize(n);
    state_.waypoint_idx.assign(n, 0);
  }
  if (cfg_.task == Task::ImageMatching) {
    const int wh = render_cfg_.width * render_cfg_.height;
    state_.target_images = MatrixXdR::Zero(n, wh);
    state_.current_images = MatrixXdR::Zero(n, wh);
    state_.scenes.resize(n);
    state_.target_cameras.resize(n);
  }

  tips_.assign(tools, std::vector<Pose>(n));
  task_error_ = Eigen::VectorXd::Zero(n);
  result_.observations = MatrixXdR::Zero(n, layout_.dim);
  result_.terminal_observations = MatrixXdR::Zero(n, layout_.dim);
  result_.rewards = Eigen::VectorXd::Zero(n);
  result_.terminated.assign(n, 0);
  result_.timed_out.assign(n, 0);
}

Pose VecTaskEnv::tip_pose(int tool, int64_t row) const {
  Eigen::VectorXd q = sims_[tool].q.row(row);
  return tool_bases_[tool].compose(forward_kinematics(models_[tool], q));
}

Eigen::Vector3d VecTaskEnv::sample_goal(Pcg32& rng, const Eigen::Vector3d& center) const {
  for (int attempt = 0; attempt < kGoalRejectionLimit; ++attempt) {
    Eigen::Vector3d g = center + Eigen::Vector3d(rng.normal(0.0, cfg_.goal_sigma),
                                                 rng.normal(0.0, cfg_.goal_sigma),
                                                 rng.normal(0.0, cfg_.goal_sigma));
    if ((g - center).norm() <= workspace_radius_) return g;
  }
  throw ConfigError("goal sampling rejected " + std::to_string(kGoalRejectionLimit) +
                    " candidates; workspace_radius is misconfigured for goal_sigma");
}

void VecTaskEnv::sample_path(int64_t row) {
  Pcg32& rng = sims_[0].rng[row];
  CubicSpline3 s;
  for (int k = 0; k < 3; ++k) s.a[k] = rng.uniform(-0.5, 0.5);
  for (int k = 0; k < 3; ++k) s.b[k] = rng.uniform(-0.5, 0.5);
  for (int k = 0; k < 3; ++k) s.c[k] = rng.uniform(-0.3, 0.3);
  s.d = sample_goal(rng, workspace_centers_[0]);
  s.t0 = 0.0;
  s.t1 = 1.0;

  // Shrink the offset polynomial so the whole path stays inside the
  // reachable ball around the workspace center.
  double max_off = 0.0;
  for (int k = 0; k <= 100; ++k) {
    max_off = std::max(max_off, (s.eval(0.01 * k) - s.d).norm());
  }
  const double allowed = workspace_radius_ - (s.d - workspace_centers_[0]).norm();
  if (max_off > 0.0 && max_off > allowed) {
    const double scale = 0.95 * std::max(allowed, 0.0) / max_off;
    s.a *= scale;
    s.b *= scale;
    s.c *= scale;
  }
  state_.splines[row] = s;
  state_.waypoints[row] = sample_spline_waypoints(s, cfg_.waypoint_spacing);
  state_.waypoint_idx[row] = 0;
}

void VecTaskEnv::sample_scene(int64_t row) {
  Pcg32& rng = sims_[0].rng[row];
  const Eigen::Vector3d& center = workspace_centers_[0];
  auto& scene = state_.scenes[row];
  scene.resize(3);
  for (auto& s : scene) {
    s.center = center + Eigen::Vector3d(rng.uniform(-2.0 * cfg_.goal_sigma, 2.0 * cfg_.goal_sigma),
                                        rng.uniform(-2.0 * cfg_.goal_sigma, 2.0 * cfg_.goal_sigma),
                                        -(workspace_radius_ + rng.uniform(0.1, 0.25)));
    s.radius = rng.uniform(0.02, 0.05);
    s.albedo = rng.uniform(0.5, 1.0);
  }
  // Target view from a mildly tilted reachable configuration.
  Eigen::VectorXd q = sample_q_fraction(rng, models_[0], 0.25);
  state_.target_cameras[row] = tool_bases_[0].compose(forward_kinematics(models_[0], q));
  render(state_.target_cameras[row], render_cfg_, scene,
         std::span<double>(state_.target_images.row(row).data(),
                           static_cast<size_t>(state_.target_images.cols())));
}

void VecTaskEnv::render_row(int64_t row) {
  Pose cam = tool_bases_[0].compose(forward_kinematics(
      models_[0], Eigen::VectorXd(sims_[0].q.row(row))));
  render(cam, render_cfg_, state_.scenes[row],
         std::span<double>(state_.current_images.row(row).data(),
                           static_cast<size_t>(state_.current_images.cols())));
}

void VecTaskEnv::refresh_tips(int64_t row) {
  for (size_t t = 0; t < models_.size(); ++t) {
    Eigen::VectorXd q = sims_[t].q.row(row);
    tips_[t][row] = tool_bases_[t].compose(forward_kinematics(models_[t], q));
  }
}

void VecTaskEnv::reset_row(int64_t row) {
  for (size_t t = 0; t < models_.size(); ++t) {
    SimBatch& sim = sims_[t];
    Pcg32& rng = sim.rng[row];
    for (int d = 0; d < models_[t].dof_count; ++d) {
      const auto& j = models_[t].dof_joint(d);
      const double quarter = 0.25 * (j.limit_hi - j.limit_lo);
      sim.q(row, d) = rng.uniform(j.limit_lo + quarter, j.limit_hi - quarter);
      sim.qdot(row, d) = 0.0;
      sim.q_target(row, d) = sim.q(row, d);
    }
  }
  refresh_tips(row);

  switch (cfg_.task) {
    case Task::TargetReaching:
      state_.goals.row(row) = sample_goal(sims_[0].rng[row], workspace_centers_[0]).transpose();
      break;
    case Task::ActiveTracking: {
      Eigen::Vector3d g = sample_goal(sims_[0].rng[row], workspace_centers_[0]);
      state_.goals.row(row) = g.transpose();
      state_.goal_spawn.row(row) = g.transpose();
      state_.goal_vel.row(row).setZero();
      break;
    }
    case Task::PathFollowing:
      sample_path(row);
      state_.goals.row(row) = state_.waypoints[row].front().transpose();
      break;
    case Task::ImageMatching:
      sample_scene(row);
      render_row(row);
      break;
    case Task::MultiToolReaching:
      for (size_t t = 0; t < models_.size(); ++t) {
        if (models_[t].name == "ecm") {
          // Camera arm: its target is the midpoint of the other tips.
          Eigen::Vector3d mid = Eigen::Vector3d::Zero();
          int count = 0;
          for (size_t u = 0; u < models_.size(); ++u) {
            if (u == t) continue;
            mid += tips_[u][row].position;
            ++count;
          }
          state_.goals.row(row).segment<3>(3 * t) = (mid / count).transpose();
        } else {
          state_.goals.row(row).segment<3>(3 * t) =
              sample_goal(sims_[t].rng[row], workspace_centers_[t]).transpose();
        }
      }
      break;
  }

  state_.step_count[row] = 0;
  state_.hold_count[row] = 0;
  state_.episode_count[row] += 1;
}

void VecTaskEnv::observe_rows(const std::vector<int64_t>& rows, MatrixXdR& dst) {
  const size_t tools = models_.size();
  for (int64_t row : rows) {
    double* out = dst.row(row).data();
    int off = 0;
    for (size_t t = 0; t < tools; ++t) {
      const int dof = models_[t].dof_count;
      for (int d = 0; d < dof; ++d) out[off++] = sims_[t].q(row, d);
    }
    for (size_t t = 0; t < tools; ++t) {
      const int dof = models_[t].dof_count;
      for (int d = 0; d < dof; ++d) out[off++] = sims_[t].qdot(row, d);
    }
    for (size_t t = 0; t < tools; ++t) {
      const Eigen::Vector3d& p = tips_[t][row].position;
      out[off++] = p[0];
      out[off++] = p[1];
      out[off++] = p[2];
    }
    for (size_t t = 0; t < tools; ++t) {
      const int dof = models_[t].dof_count;
      for (int d = 0; d < dof; ++d) out[off++] = sims_[t].q_target(row, d);
    }
    switch (cfg_.task) {
      case Task::TargetReaching:
      case Task::ActiveTracking:
      case Task::MultiToolReaching:
        for (int k = 0; k < state_.goals.cols(); ++k) out[off++] = state_.goals(row, k);
        break;
      case Task::PathFollowing: {
        const Eigen::Vector3d& wp = state_.waypoints[row][state_.waypoint_idx[row]];
        out[off++] = wp[0];
        out[off++] = wp[1];
        out[off++] = wp[2];
        break;
      }
      case Task::ImageMatching: {
        const int wh = render_cfg_.width * render_cfg_.height;
        const double* timg = state_.target_images.row(row).data();
        const double* cimg = state_.current_images.row(row).data();
        for (int k = 0; k < wh; ++k) out[off++] = timg[k];
        for (int k = 0; k < wh; ++k) out[off++] = cimg[k];
        break;
      }
    }
  }
}

void VecTaskEnv::observe_all(MatrixXdR& dst) {
  const int64_t n = cfg_.n_envs;
  auto body = [&](int64_t begin, int64_t end) {
    std::vector<int64_t> rows;
    rows.reserve(end - begin);
    for (int64_t i = begin; i < end; ++i) rows.push_back(i);
    observe_rows(rows, dst);
  };
  if (pool_ != nullptr) {
    pool_->parallel_for(n, kRowGrain, body);
  } else {
    body(0, n);
  }
}

const MatrixXdR& VecTaskEnv::reset() {
  for (int64_t i = 0; i < cfg_.n_envs; ++i) {
    reset_row(i);
    state_.episode_count[i] = 0;
  }
  observe_all(result_.observations);
  std::fill(result_.terminated.begin(), result_.terminated.end(), 0);
  std::fill(result_.timed_out.begin(), result_.timed_out.end(), 0);
  result_.rewards.setZero();
  return result_.observations;
}

const StepResult& VecTaskEnv::step(const Eigen::Ref<const MatrixXdR>& actions) {
  const int64_t n = cfg_.n_envs;
  const size_t tools = models_.size();
  if (actions.rows() != n || actions.cols() != action_dim_) {
    throw SimError("env.step: action shape mismatch");
  }

  // Advance dynamics, tool by tool (action columns are tool-major).
  result_.action_saturations = 0;
  int col = 0;
  for (size_t t = 0; t < tools; ++t) {
    const int dof = models_[t].dof_count;
    StepDiagnostics diag =
        scalpel::step(sims_[t], actions.middleCols(col, dof), dyn_[t], models_[t], pool_);
    result_.action_saturations += diag.saturated_actions;
    col += dof;
  }

  // Refresh world-frame tips.
  auto fk_body = [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) refresh_tips(i);
  };
  if (pool_ != nullptr) {
    pool_->parallel_for(n, kRowGrain, fk_body);
  } else {
    fk_body(0, n);
  }
  if (cfg_.task == Task::ImageMatching) {
    auto img_body = [&](int64_t begin, int64_t end) {
      for (int64_t i = begin; i < end; ++i) render_row(i);
    };
    if (pool_ != nullptr) {
      pool_->parallel_for(n, kRowGrain, img_body);
    } else {
      img_body(0, n);
    }
  }

  // Rewards, task-state updates, termination flags.
  const double rho = cfg_.reward_scale;
  std::atomic<bool> bad_reward{false};
  auto reward_body = [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      state_.step_count[i] += 1;
      double reward = 0.0;
      bool goal_met = false;
      switch (cfg_.task) {
        case Task::TargetReaching: {
          const double dist =
              (tips_[0][i].position - Eigen::Vector3d(state_.goals.row(i))).norm();
          reward = rho * dist;
          task_error_[i] = dist;
          state_.hold_count[i] = dist < cfg_.success_radius ? state_.hold_count[i] + 1 : 0;
          goal_met = state_.hold_count[i] >= cfg_.success_hold;
          break;
        }
        case Task::ActiveTracking: {
          Eigen::Vector3d g = state_.goals.row(i);
          const double dist = (tips_[0][i].position - g).norm();
          reward = rho * dist;
          task_error_[i] = dist;
          // Goal drifts after the reward is scored.
          Pcg32& rng = sims_[0].rng[i];
          Eigen::Vector3d vel = state_.goal_vel.row(i);
          g += vel;
          for (int k = 0; k < 3; ++k) {
            const double lo = state_.goal_spawn(i, k) - cfg_.goal_offset_clip;
            const double hi = state_.goal_spawn(i, k) + cfg_.goal_offset_clip;
            g[k] = std::clamp(g[k], lo, hi);
            vel[k] += rng.normal(0.0, cfg_.tracking_vel_noise_std);
            vel[k] = std::clamp(vel[k], -cfg_.tracking_vel_clamp, cfg_.tracking_vel_clamp);
          }
          state_.goals.row(i) = g.transpose();
          state_.goal_vel.row(i) = vel.transpose();
          break;
        }
        case Task::ImageMatching: {
          const int wh = render_cfg_.width * render_cfg_.height;
          const double* cur = state_.current_images.row(i).data();
          const double* tgt = state_.target_images.row(i).data();
          double sum = 0.0;
          for (int k = 0; k < wh; ++k) sum += std::abs(cur[k] - tgt[k]);
          const double err = sum / wh;
          reward = -err;
          task_error_[i] = err;
          break;
        }
        case Task::PathFollowing: {
          auto& wps = state_.waypoints[i];
          int32_t& idx = state_.waypoint_idx[i];
          const double dist = (tips_[0][i].position - wps[idx]).norm();
          reward = -cfg_.path_penalty * dist;
          task_error_[i] = dist;
          // Advance past every waypoint already inside the success radius.
          while (idx + 1 < static_cast<int32_t>(wps.size()) &&
                 (tips_[0][i].position - wps[idx]).norm() < cfg_.success_radius) {
            ++idx;
          }
          goal_met = idx + 1 == static_cast<int32_t>(wps.size()) &&
                     (tips_[0][i].position - wps[idx]).norm() < cfg_.success_radius;
          state_.goals.row(i) = wps[idx].transpose();
          break;
        }
        case Task::MultiToolReaching: {
          double err_sum = 0.0;
          int err_count = 0;
          bool all_in = true;
          for (size_t t = 0; t < tools; ++t) {
            if (models_[t].name == "ecm") {
              Eigen::Vector3d mid = Eigen::Vector3d::Zero();
              int count = 0;
              for (size_t u = 0; u < tools; ++u) {
                if (u == t) continue;
                mid += tips_[u][i].position;
                ++count;
              }
              mid /= count;
              state_.goals.row(i).segment<3>(3 * t) = mid.transpose();
              const Eigen::Vector3d axis =
                  tips_[t][i].orientation * Eigen::Vector3d(0.0, 0.0, -1.0);
              const Eigen::Vector3d to_mid = mid - tips_[t][i].position;
              if (to_mid.norm() > 1e-12) {
                const double cosang =
                    std::clamp(axis.dot(to_mid.normalized()), -1.0, 1.0);
                reward += -cfg_.view_penalty * std::acos(cosang);
              }
            } else {
              const double dist =
                  (tips_[t][i].position -
                   Eigen::Vector3d(state_.goals.row(i).segment<3>(3 * t)))
                      .norm();
              reward += rho * dist;
              err_sum += dist;
              ++err_count;
              if (dist >= cfg_.success_radius) all_in = false;
            }
          }
          double min_sep = std::numeric_limits<double>::infinity();
          for (size_t t = 0; t + 1 < tools; ++t) {
            for (size_t u = t + 1; u < tools; ++u) {
              min_sep = std::min(min_sep, (tips_[t][i].position - tips_[u][i].position).norm());
            }
          }
          if (min_sep < cfg_.collision_threshold) {
            reward += -cfg_.collision_penalty;
          }
          task_error_[i] = err_count > 0 ? err_sum / err_count : 0.0;
          state_.hold_count[i] = all_in ? state_.hold_count[i] + 1 : 0;
          goal_met = state_.hold_count[i] >= cfg_.success_hold;
          break;
        }
      }
      if (!std::isfinite(reward)) bad_reward.store(true, std::memory_order_relaxed);
      result_.rewards[i] = reward;
      result_.terminated[i] = goal_met ? 1 : 0;
      result_.timed_out[i] = state_.step_count[i] >= cfg_.episode_len ? 1 : 0;
    }
  };
  if (pool_ != nullptr) {
    pool_->parallel_for(n, kRowGrain, reward_body);
  } else {
    reward_body(0, n);
  }
  if (bad_reward.load()) throw SimError("env.step: non-finite reward");

  // Observe everything post-step, keep pre-reset rows for bootstrapping,
  // then reset ended rows and re-observe just those.
  observe_all(result_.observations);
  ended_rows_.clear();
  for (int64_t i = 0; i < n; ++i) {
    if (result_.terminated[i] || result_.timed_out[i]) {
      ended_rows_.push_back(i);
      result_.terminal_observations.row(i) = result_.observations.row(i);
    }
  }
  if (!ended_rows_.empty()) {
    for (int64_t i : ended_rows_) reset_row(i);
    observe_rows(ended_rows_, result_.observations);
  }
  return result_;
}

}  // namespace scalpel
