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

#include "scalpel/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "scalpel/errors.hpp"

namespace scalpel {

using nlohmann::json;

namespace {

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

Eigen::Vector3d vec3_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(path + " must be a 3-element array");
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json gains_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd gains_from_json(const json& j, const std::string& path) {
  // A scalar broadcasts to every DoF; an empty array means per-robot defaults.
  if (j.is_number()) {
    Eigen::VectorXd v(1);
    v[0] = j.get<double>();
    return v;
  }
  if (!j.is_array()) throw ConfigError(path + " must be a number or an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

// Rejects keys that the template does not know, recursively.
void check_unknown_keys(const json& user, const json& tmpl, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    if (!tmpl.is_object() || !tmpl.contains(key)) {
      throw ConfigError("unknown configuration key '" + sub + "'");
    }
    check_unknown_keys(value, tmpl.at(key), sub);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + path + "." + key + "'");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (robots.empty()) throw ConfigError("robots must name at least one robot");
  env.validate();
  train.validate();
  bench.validate();
  render.validate();
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["robots"] = cfg.robots;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir;

  json env;
  env["task"] = to_string(cfg.env.task);
  env["n_envs"] = cfg.env.n_envs;
  env["episode_len"] = cfg.env.episode_len;
  env["goal_sigma"] = cfg.env.goal_sigma;
  env["goal_offset_clip"] = cfg.env.goal_offset_clip;
  env["reward_scale"] = cfg.env.reward_scale;
  env["path_penalty"] = cfg.env.path_penalty;
  env["success_radius"] = cfg.env.success_radius;
  env["success_hold"] = cfg.env.success_hold;
  env["workspace_radius"] = cfg.env.workspace_radius;
  env["waypoint_spacing"] = cfg.env.waypoint_spacing;
  env["tracking_vel_noise_std"] = cfg.env.tracking_vel_noise_std;
  env["tracking_vel_clamp"] = cfg.env.tracking_vel_clamp;
  env["collision_threshold"] = cfg.env.collision_threshold;
  env["collision_penalty"] = cfg.env.collision_penalty;
  env["view_penalty"] = cfg.env.view_penalty;
  json bases = json::array();
  for (const auto& b : cfg.env.tool_bases) {
    bases.push_back({{"xyz", vec3_to_json(b.position)}, {"rpy", vec3_to_json(rpy_from_quat(b.orientation))}});
  }
  env["tool_bases"] = bases;
  j["env"] = env;

  json dyn;
  dyn["control_dt"] = cfg.dynamics.control_dt;
  dyn["substeps"] = cfg.dynamics.substeps;
  dyn["control_mode"] = to_string(cfg.dynamics.control_mode);
  dyn["kp"] = gains_to_json(cfg.dynamics.kp);
  dyn["kd"] = gains_to_json(cfg.dynamics.kd);
  dyn["inertia"] = gains_to_json(cfg.dynamics.inertia);
  dyn["damping"] = gains_to_json(cfg.dynamics.damping);
  j["dynamics"] = dyn;

  json train;
  train["gamma"] = cfg.train.gamma;
  train["lambda"] = cfg.train.lam;
  train["clip_eps"] = cfg.train.clip_eps;
  train["learning_rate"] = cfg.train.learning_rate;
  train["epochs"] = cfg.train.epochs;
  train["minibatch_count"] = cfg.train.minibatch_count;
  train["value_coef"] = cfg.train.value_coef;
  train["entropy_coef"] = cfg.train.entropy_coef;
  train["max_grad_norm"] = cfg.train.max_grad_norm;
  train["total_env_steps"] = cfg.train.total_env_steps;
  train["n_steps"] = cfg.train.n_steps;
  train["n_robots"] = cfg.train.n_robots;
  train["init_log_std"] = cfg.train.init_log_std;
  train["checkpoint_interval"] = cfg.train.checkpoint_interval;
  train["timeout_bootstrap"] = cfg.train.timeout_bootstrap;
  j["train"] = train;

  json bench;
  bench["mode"] = to_string(cfg.bench.mode);
  bench["total_steps"] = cfg.bench.total_steps;
  bench["runs"] = cfg.bench.runs;
  j["bench"] = bench;

  json render;
  render["width"] = cfg.render.width;
  render["height"] = cfg.render.height;
  render["fov"] = cfg.render.fov;
  render["near"] = cfg.render.near;
  render["far"] = cfg.render.far;
  json scene = json::array();
  for (const auto& s : cfg.render.scene) {
    scene.push_back(
        {{"center", vec3_to_json(s.center)}, {"radius", s.radius}, {"albedo", s.albedo}});
  }
  render["scene"] = scene;
  j["render"] = render;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  check_unknown_keys(j, run_config_to_json(cfg), "");

  get_if(j, "robots", cfg.robots, "");
  get_if(j, "seed", cfg.seed, "");
  get_if(j, "threads", cfg.threads, "");
  get_if(j, "output_dir", cfg.output_dir, "");

  if (j.contains("env")) {
    const json& e = j.at("env");
    if (e.contains("task")) cfg.env.task = task_from_string(e.at("task").get<std::string>());
    get_if(e, "n_envs", cfg.env.n_envs, "env");
    get_if(e, "episode_len", cfg.env.episode_len, "env");
    get_if(e, "goal_sigma", cfg.env.goal_sigma, "env");
    get_if(e, "goal_offset_clip", cfg.env.goal_offset_clip, "env");
    get_if(e, "reward_scale", cfg.env.reward_scale, "env");
    get_if(e, "path_penalty", cfg.env.path_penalty, "env");
    get_if(e, "success_radius", cfg.env.success_radius, "env");
    get_if(e, "success_hold", cfg.env.success_hold, "env");
    get_if(e, "workspace_radius", cfg.env.workspace_radius, "env");
    get_if(e, "waypoint_spacing", cfg.env.waypoint_spacing, "env");
    get_if(e, "tracking_vel_noise_std", cfg.env.tracking_vel_noise_std, "env");
    get_if(e, "tracking_vel_clamp", cfg.env.tracking_vel_clamp, "env");
    get_if(e, "collision_threshold", cfg.env.collision_threshold, "env");
    get_if(e, "collision_penalty", cfg.env.collision_penalty, "env");
    get_if(e, "view_penalty", cfg.env.view_penalty, "env");
    if (e.contains("tool_bases")) {
      cfg.env.tool_bases.clear();
      for (const auto& b : e.at("tool_bases")) {
        Pose p;
        p.position = vec3_from_json(b.at("xyz"), "env.tool_bases.xyz");
        if (b.contains("rpy")) {
          Eigen::Vector3d rpy = vec3_from_json(b.at("rpy"), "env.tool_bases.rpy");
          p.orientation = quat_from_rpy(rpy[0], rpy[1], rpy[2]);
        }
        cfg.env.tool_bases.push_back(p);
      }
    }
  }

  if (j.contains("dynamics")) {
    const json& d = j.at("dynamics");
    get_if(d, "control_dt", cfg.dynamics.control_dt, "dynamics");
    get_if(d, "substeps", cfg.dynamics.substeps, "dynamics");
    if (d.contains("control_mode")) {
      cfg.dynamics.control_mode = control_mode_from_string(d.at("control_mode").get<std::string>());
    }
    if (d.contains("kp")) cfg.dynamics.kp = gains_from_json(d.at("kp"), "dynamics.kp");
    if (d.contains("kd")) cfg.dynamics.kd = gains_from_json(d.at("kd"), "dynamics.kd");
    if (d.contains("inertia")) {
      cfg.dynamics.inertia = gains_from_json(d.at("inertia"), "dynamics.inertia");
    }
    if (d.contains("damping")) {
      cfg.dynamics.damping = gains_from_json(d.at("damping"), "dynamics.damping");
    }
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    get_if(t, "gamma", cfg.train.gamma, "train");
    get_if(t, "lambda", cfg.train.lam, "train");
    get_if(t, "clip_eps", cfg.train.clip_eps, "train");
    get_if(t, "learning_rate", cfg.train.learning_rate, "train");
    get_if(t, "epochs", cfg.train.epochs, "train");
    get_if(t, "minibatch_count", cfg.train.minibatch_count, "train");
    get_if(t, "value_coef", cfg.train.value_coef, "train");
    get_if(t, "entropy_coef", cfg.train.entropy_coef, "train");
    get_if(t, "max_grad_norm", cfg.train.max_grad_norm, "train");
    get_if(t, "total_env_steps", cfg.train.total_env_steps, "train");
    get_if(t, "n_steps", cfg.train.n_steps, "train");
    get_if(t, "n_robots", cfg.train.n_robots, "train");
    get_if(t, "init_log_std", cfg.train.init_log_std, "train");
    get_if(t, "checkpoint_interval", cfg.train.checkpoint_interval, "train");
    get_if(t, "timeout_bootstrap", cfg.train.timeout_bootstrap, "train");
  }

  if (j.contains("bench")) {
    const json& b = j.at("bench");
    if (b.contains("mode")) cfg.bench.mode = bench_mode_from_string(b.at("mode").get<std::string>());
    get_if(b, "total_steps", cfg.bench.total_steps, "bench");
    get_if(b, "runs", cfg.bench.runs, "bench");
  }

  if (j.contains("render")) {
    const json& r = j.at("render");
    get_if(r, "width", cfg.render.width, "render");
    get_if(r, "height", cfg.render.height, "render");
    get_if(r, "fov", cfg.render.fov, "render");
    get_if(r, "near", cfg.render.near, "render");
    get_if(r, "far", cfg.render.far, "render");
    if (r.contains("scene")) {
      cfg.render.scene.clear();
      for (const auto& s : r.at("scene")) {
        SceneSphere sphere;
        sphere.center = vec3_from_json(s.at("center"), "render.scene.center");
        if (s.contains("radius")) sphere.radius = s.at("radius").get<double>();
        if (s.contains("albedo")) sphere.albedo = s.at("albedo").get<double>();
        cfg.render.scene.push_back(sphere);
      }
    }
  }

  // One master seed drives every module.
  cfg.env.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  return cfg;
}

namespace {

void apply_override(json& j, const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + spec + "' is not of the form path.to.key=value");
  }
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings (task names, paths)
  }

  json* node = &j;
  size_t begin = 0;
  for (;;) {
    const size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("override '" + spec + "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path_or_empty,
                          const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path_or_empty.empty()) {
    std::ifstream in(path_or_empty);
    if (!in) throw ConfigError("cannot open config file '" + path_or_empty + "'");
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + path_or_empty + "': " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig cfg = run_config_from_json(j);
  cfg.validate();
  return cfg;
}

json layout_to_json(const ObservationLayout& layout, const std::string& task,
                    const std::vector<std::string>& robots) {
  json j;
  j["task"] = task;
  j["robots"] = robots;
  j["obs_dim"] = layout.dim;
  json fields = json::array();
  for (const auto& f : layout.fields) {
    fields.push_back({{"name", f.name}, {"offset", f.offset}, {"length", f.length}});
  }
  j["fields"] = fields;
  return j;
}

json bench_report_to_json(const BenchReport& report) {
  json j;
  j["mode"] = report.mode;
  j["task"] = report.task;
  j["robot"] = report.robot;
  j["n_envs"] = report.n_envs;
  j["steps_per_run"] = report.steps_per_run;
  j["runs"] = report.runs;
  j["run_seconds"] = report.run_seconds;
  j["run_steps"] = report.run_steps;
  j["seconds_per_1m_mean"] = report.mean_sec_per_1m;
  j["seconds_per_1m_std"] = report.std_sec_per_1m;
  j["fps_mean"] = report.mean_fps;
  j["fps_std"] = report.std_fps;
  j["clock_anomaly"] = report.clock_anomaly;
  j["host"] = {{"hardware_threads", report.host.hardware_threads},
               {"pool_lanes", report.host.pool_lanes},
               {"clock", report.host.clock}};
  return j;
}

std::unique_ptr<VecTaskEnv> make_env(const RunConfig& cfg, ThreadPool* pool) {
  std::vector<RobotModel> models;
  for (const auto& name : cfg.robots) models.push_back(resolve_robot(name));
  return std::make_unique<VecTaskEnv>(cfg.env, std::move(models), cfg.dynamics, cfg.render, pool);
}

}  // namespace scalpel
