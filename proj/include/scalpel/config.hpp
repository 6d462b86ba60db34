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

#include <nlohmann/json_fwd.hpp>

#include "scalpel/bench.hpp"
#include "scalpel/envs.hpp"
#include "scalpel/ppo.hpp"

namespace scalpel {

// Fully resolved run configuration. Every field has a default; unknown keys
// in the file or overrides are errors. One top-level seed feeds the
// environment, dynamics resets, and the trainer.
struct RunConfig {
  std::vector<std::string> robots = {"psm"};
  EnvConfig env;
  DynamicsConfig dynamics;     // empty gain vectors -> per-robot defaults
  TrainConfig train;
  BenchProtocol bench;
  RenderConfig render;
  std::string output_dir = "runs/last";
  int threads = 0;             // 0 -> hardware concurrency
  uint64_t seed = 0;

  void validate() const;
};

// Defaults, overlaid with the file (optional) and dotted-path overrides
// ("train.n_robots=64", "env.task=active_tracking"). Unknown keys throw
// ConfigError naming the field path.
RunConfig load_run_config(const std::string& path_or_empty,
                          const std::vector<std::string>& overrides);

// The resolved configuration as JSON; reloading it reproduces the run.
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json layout_to_json(const ObservationLayout& layout, const std::string& task,
                              const std::vector<std::string>& robots);
nlohmann::json bench_report_to_json(const BenchReport& report);

// Builds the environment described by the config (robot resolution included).
std::unique_ptr<VecTaskEnv> make_env(const RunConfig& cfg, ThreadPool* pool);

}  // namespace scalpel
