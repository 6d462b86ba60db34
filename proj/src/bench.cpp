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

#include "scalpel/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "scalpel/errors.hpp"
#include "scalpel/thread_pool.hpp"

namespace scalpel {

namespace {

using Clock = std::chrono::steady_clock;

void fill_uniform_actions(Pcg32& rng, MatrixXdR& actions) {
  double* data = actions.data();
  const int64_t count = actions.size();
  for (int64_t k = 0; k < count; ++k) data[k] = rng.uniform(-1.0, 1.0);
}

void finalize_stats(BenchReport& report) {
  const int runs = static_cast<int>(report.run_seconds.size());
  std::vector<double> spm(runs), fps(runs);
  for (int r = 0; r < runs; ++r) {
    const double secs = report.run_seconds[r];
    const double steps = static_cast<double>(report.run_steps[r]);
    if (!(secs > 0.0)) report.clock_anomaly = true;
    spm[r] = secs * 1e6 / steps;
    fps[r] = steps / secs;
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sample_std = [&](const std::vector<double>& v, double mu) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  report.mean_sec_per_1m = mean(spm);
  report.std_sec_per_1m = sample_std(spm, report.mean_sec_per_1m);
  report.mean_fps = mean(fps);
  report.std_fps = sample_std(fps, report.mean_fps);
}

HostInfo host_info(ThreadPool* pool) {
  HostInfo h;
  h.hardware_threads = static_cast<int>(std::thread::hardware_concurrency());
  h.pool_lanes = pool != nullptr ? pool->lanes() : 1;
  return h;
}

std::string robots_label(const std::vector<RobotModel>& models) {
  std::string label;
  for (const auto& m : models) {
    if (!label.empty()) label += "+";
    label += m.name;
  }
  return label;
}

}  // namespace

void BenchProtocol::validate() const {
  if (total_steps < 1) throw ConfigError("bench.total_steps must be >= 1");
  if (runs < 1) throw ConfigError("bench.runs must be >= 1");
}

BenchProtocol::Mode bench_mode_from_string(const std::string& s) {
  if (s == "sim") return BenchProtocol::Mode::SimOnly;
  if (s == "learn") return BenchProtocol::Mode::WithLearning;
  throw ConfigError("unknown bench mode '" + s + "' (sim|learn)");
}

std::string to_string(BenchProtocol::Mode mode) {
  return mode == BenchProtocol::Mode::SimOnly ? "sim" : "learn";
}

BenchReport bench_sim(const EnvConfig& env_cfg, const std::vector<RobotModel>& models,
                      const DynamicsConfig& dyn, const RenderConfig& render_cfg,
                      const BenchProtocol& protocol, ThreadPool* pool) {
  protocol.validate();
  BenchReport report;
  report.mode = to_string(BenchProtocol::Mode::SimOnly);
  report.task = to_string(env_cfg.task);
  report.robot = robots_label(models);
  report.n_envs = env_cfg.n_envs;
  report.steps_per_run = protocol.total_steps;
  report.runs = protocol.runs;
  report.host = host_info(pool);

  for (int run = 0; run < protocol.runs; ++run) {
    // Fresh instance per run; a run-specific seed decorrelates instances.
    EnvConfig cfg = env_cfg;
    cfg.seed = env_cfg.seed + static_cast<uint64_t>(run);
    VecTaskEnv env(cfg, models, dyn, render_cfg, pool);
    Pcg32 action_rng = make_stream(cfg.seed, 0xac7104);
    MatrixXdR actions(env.n_envs(), env.action_dim());

    env.reset();
    fill_uniform_actions(action_rng, actions);
    env.step(actions);  // warmup: timing starts after the first step

    int64_t steps = 0;
    const auto t0 = Clock::now();
    while (steps < protocol.total_steps) {
      fill_uniform_actions(action_rng, actions);
      env.step(actions);  // observations and rewards computed, then ignored
      steps += env.n_envs();
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    report.run_seconds.push_back(elapsed);
    report.run_steps.push_back(steps);
  }
  finalize_stats(report);
  return report;
}

BenchReport bench_learning(const EnvConfig& env_cfg, const std::vector<RobotModel>& models,
                           const DynamicsConfig& dyn, const RenderConfig& render_cfg,
                           TrainConfig train_cfg, const BenchProtocol& protocol,
                           ThreadPool* pool) {
  protocol.validate();
  BenchReport report;
  report.mode = to_string(BenchProtocol::Mode::WithLearning);
  report.task = to_string(env_cfg.task);
  report.robot = robots_label(models);
  report.n_envs = env_cfg.n_envs;
  report.steps_per_run = protocol.total_steps;
  report.runs = protocol.runs;
  report.host = host_info(pool);

  train_cfg.n_robots = env_cfg.n_envs;
  train_cfg.total_env_steps = protocol.total_steps;

  for (int run = 0; run < protocol.runs; ++run) {
    EnvConfig cfg = env_cfg;
    cfg.seed = env_cfg.seed + static_cast<uint64_t>(run);
    TrainConfig tc = train_cfg;
    tc.seed = cfg.seed;
    VecTaskEnv env(cfg, models, dyn, render_cfg, pool);
    Policy policy(env.obs_dim(), env.action_dim());
    policy.init_params(tc.seed, tc.init_log_std);
    Trainer trainer(env, policy, tc, pool);

    Clock::time_point t0;
    trainer.run(nullptr, [&] { t0 = Clock::now(); });
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    // The warmup step ran before the clock started.
    const int64_t steps = trainer.env_steps() - env.n_envs();
    report.run_seconds.push_back(elapsed);
    report.run_steps.push_back(steps > 0 ? steps : trainer.env_steps());
  }
  finalize_stats(report);
  return report;
}

std::string format_bench_table(const BenchReport& report) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "mode=%s task=%s robot=%s envs=%lld steps/run=%lld runs=%d\n",
                report.mode.c_str(), report.task.c_str(), report.robot.c_str(),
                static_cast<long long>(report.n_envs),
                static_cast<long long>(report.steps_per_run), report.runs);
  out += line;
  std::snprintf(line, sizeof(line), "host: %d hw threads, %d pool lanes, %s%s\n",
                report.host.hardware_threads, report.host.pool_lanes, report.host.clock.c_str(),
                report.clock_anomaly ? " [CLOCK ANOMALY]" : "");
  out += line;
  out += "Seconds per 1M Timesteps | Frames per second\n";
  std::snprintf(line, sizeof(line), "       %10.3f +/- %-8.3f | %10.0f +/- %-8.0f\n",
                report.mean_sec_per_1m, report.std_sec_per_1m, report.mean_fps, report.std_fps);
  out += line;
  return out;
}

}  // namespace scalpel
