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

#include <string>
#include <vector>

#include "scalpel/envs.hpp"
#include "scalpel/ppo.hpp"

namespace scalpel {

// Profiling protocol: timing begins after the first simulation step of each
// run and ends once total_steps aggregate environment transitions have been
// counted inside the timed region. Each run uses a fresh environment
// instance. "Steps" are transitions summed across all parallel environments.
struct BenchProtocol {
  enum class Mode { SimOnly, WithLearning };
  Mode mode = Mode::SimOnly;
  int64_t total_steps = 1'000'000;
  int runs = 30;

  void validate() const;  // throws ConfigError
};

BenchProtocol::Mode bench_mode_from_string(const std::string& s);
std::string to_string(BenchProtocol::Mode mode);

struct HostInfo {
  int hardware_threads = 0;
  int pool_lanes = 0;
  std::string clock = "steady_clock";
};

struct BenchReport {
  std::string mode;
  std::string task;
  std::string robot;
  int64_t n_envs = 0;
  int64_t steps_per_run = 0;
  int runs = 0;
  std::vector<double> run_seconds;      // per run, timed region only
  std::vector<int64_t> run_steps;       // transitions counted per run
  double mean_sec_per_1m = 0.0;
  double std_sec_per_1m = 0.0;
  double mean_fps = 0.0;
  double std_fps = 0.0;
  bool clock_anomaly = false;
  HostInfo host;
};

// Random in [-1,1] actions, feedback discarded.
BenchReport bench_sim(const EnvConfig& env_cfg, const std::vector<RobotModel>& models,
                      const DynamicsConfig& dyn, const RenderConfig& render_cfg,
                      const BenchProtocol& protocol, ThreadPool* pool);

// Full learning dynamics: policy forward, reward accumulation, GAE, and PPO
// updates all inside the timed region.
BenchReport bench_learning(const EnvConfig& env_cfg, const std::vector<RobotModel>& models,
                           const DynamicsConfig& dyn, const RenderConfig& render_cfg,
                           TrainConfig train_cfg, const BenchProtocol& protocol, ThreadPool* pool);

// Two-column table in the style of the simulator-speed comparisons:
// seconds per 1M timesteps and frames per second, mean +/- std.
std::string format_bench_table(const BenchReport& report);

}  // namespace scalpel
