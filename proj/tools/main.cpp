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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "scalpel/bench.hpp"
#include "scalpel/config.hpp"
#include "scalpel/errors.hpp"
#include "scalpel/eval.hpp"
#include "scalpel/thread_pool.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  const char* root = std::getenv("SCALPEL_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0' && p.is_relative()) p = fs::path(root) / p;
  fs::create_directories(p);
  return p;
}

std::string robots_label(const std::vector<std::string>& robots) {
  std::string label;
  for (const auto& r : robots) {
    if (!label.empty()) label += "+";
    label += r;
  }
  return label;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw scalpel::SimError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

json iteration_to_json(const scalpel::IterationStats& s) {
  json j;
  j["iter"] = s.iteration;
  j["env_steps"] = s.env_steps;
  j["episodes"] = s.episodes_completed;
  j["mean_episode_reward"] = s.mean_episode_reward;
  j["mean_final_distance"] = s.mean_final_error;
  j["mean_step_reward"] = s.mean_step_reward;
  j["policy_loss"] = s.ppo.policy_loss;
  j["value_loss"] = s.ppo.value_loss;
  j["entropy"] = s.ppo.entropy;
  j["kl"] = s.ppo.kl;
  j["clip_fraction"] = s.ppo.clip_fraction;
  j["log_std_mean"] = s.log_std_mean;
  j["action_saturations"] = s.action_saturations;
  // Wall-clock fields; excluded from determinism comparisons.
  j["fps"] = s.fps;
  j["wall_time_s"] = s.wall_time_s;
  return j;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  scalpel::RunConfig cfg = scalpel::load_run_config(config_path, overrides);
  cfg.env.n_envs = cfg.train.n_robots;  // the trainer owns the batch width

  scalpel::ThreadPool pool(cfg.threads);
  auto env = scalpel::make_env(cfg, &pool);
  scalpel::Policy policy(env->obs_dim(), env->action_dim());
  policy.init_params(cfg.seed, cfg.train.init_log_std);

  const fs::path outdir = resolve_output_dir(cfg.output_dir);
  write_json_file(outdir / "config.json", scalpel::run_config_to_json(cfg));
  write_json_file(outdir / "observation_layout.json",
                  scalpel::layout_to_json(env->layout(), to_string(cfg.env.task), cfg.robots));

  std::ofstream metrics(outdir / "metrics.jsonl");
  if (!metrics) throw scalpel::SimError("cannot write metrics.jsonl");

  const scalpel::CheckpointMeta meta{robots_label(cfg.robots), to_string(cfg.env.task)};
  auto save_latest = [&](const scalpel::Policy& p) {
    const fs::path tmp = outdir / "checkpoint_latest.bin.tmp";
    scalpel::save_checkpoint(tmp.string(), p, meta);
    fs::rename(tmp, outdir / "checkpoint_latest.bin");
  };

  scalpel::Trainer trainer(*env, policy, cfg.train, &pool);
  trainer.run([&](const scalpel::IterationStats& stats) {
    metrics << iteration_to_json(stats).dump() << "\n";
    metrics.flush();
    if (cfg.train.checkpoint_interval > 0 &&
        stats.iteration % cfg.train.checkpoint_interval == 0) {
      save_latest(policy);
    }
    std::cout << "iter " << stats.iteration << "  steps " << stats.env_steps
              << "  mean_ep_reward " << stats.mean_episode_reward << "  final_dist "
              << stats.mean_final_error << "  fps " << static_cast<int64_t>(stats.fps) << "\n";
  });

  save_latest(policy);
  scalpel::save_checkpoint((outdir / "checkpoint_final.bin").string(), policy, meta);
  std::cout << "done: " << trainer.env_steps() << " env steps, output in " << outdir << "\n";
  return 0;
}

int cmd_bench(const std::string& config_path, const std::vector<std::string>& overrides) {
  scalpel::RunConfig cfg = scalpel::load_run_config(config_path, overrides);
  scalpel::ThreadPool pool(cfg.threads);

  std::vector<scalpel::RobotModel> models;
  for (const auto& name : cfg.robots) models.push_back(scalpel::resolve_robot(name));

  scalpel::BenchReport report;
  if (cfg.bench.mode == scalpel::BenchProtocol::Mode::SimOnly) {
    report = scalpel::bench_sim(cfg.env, models, cfg.dynamics, cfg.render, cfg.bench, &pool);
  } else {
    report = scalpel::bench_learning(cfg.env, models, cfg.dynamics, cfg.render, cfg.train,
                                     cfg.bench, &pool);
  }
  std::cout << scalpel::format_bench_table(report);
  const fs::path outdir = resolve_output_dir(cfg.output_dir);
  write_json_file(outdir / ("bench_" + report.mode + ".json"),
                  scalpel::bench_report_to_json(report));
  return 0;
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& checkpoint, int64_t episodes, const std::string& trajectories) {
  scalpel::RunConfig cfg = scalpel::load_run_config(config_path, overrides);
  cfg.env.n_envs = episodes;
  cfg.env.success_hold = cfg.env.episode_len + 1;  // episodes run to full length

  scalpel::ThreadPool pool(cfg.threads);
  auto env = scalpel::make_env(cfg, &pool);

  scalpel::CheckpointMeta meta;
  scalpel::Policy policy = scalpel::load_checkpoint(checkpoint, &meta);

  std::ofstream csv;
  if (!trajectories.empty()) {
    csv.open(trajectories);
    if (!csv) throw scalpel::SimError("cannot write '" + trajectories + "'");
  }
  scalpel::EvalSummary summary =
      scalpel::evaluate_policy(*env, policy, &pool, trajectories.empty() ? nullptr : &csv);

  json j;
  j["checkpoint"] = checkpoint;
  j["checkpoint_robot"] = meta.robot;
  j["checkpoint_task"] = meta.task;
  j["episodes"] = summary.episodes;
  j["mean_final_error"] = summary.mean_final_error;
  j["mean_episode_reward"] = summary.mean_episode_reward;
  j["goal_reached"] = summary.goal_reached;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_list_robots() {
  for (const auto& name : scalpel::builtin_robot_names()) {
    scalpel::RobotModel m = scalpel::resolve_robot(name);
    std::string seq;
    for (int d = 0; d < m.dof_count; ++d) {
      if (m.jaw_joint && m.dof_to_joint[d] == *m.jaw_joint) continue;
      seq += m.dof_joint(d).kind == scalpel::JointKind::Prismatic ? 'P' : 'R';
    }
    std::cout << name << "  " << m.dof_count << " dof  " << seq
              << (m.jaw_joint ? "+jaw" : "") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scalpel: data-parallel surgical robot simulation, PPO training, and benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration file");
    sub->add_option("-O,--override", overrides,
                    "dotted-path override, e.g. train.n_robots=64 or env.task=active_tracking");
  };

  CLI::App* train = app.add_subcommand("train", "Train a policy");
  add_common(train);

  CLI::App* bench = app.add_subcommand("bench", "Profile stepping throughput");
  add_common(bench);
  std::string bench_mode, bench_task, bench_robot;
  int64_t bench_envs = 0, bench_steps = 0;
  int bench_runs = 0;
  bench->add_option("--mode", bench_mode, "sim|learn");
  bench->add_option("--envs", bench_envs, "parallel environments");
  bench->add_option("--steps", bench_steps, "aggregate transitions per run");
  bench->add_option("--runs", bench_runs, "repetitions");
  bench->add_option("--task", bench_task, "task name");
  bench->add_option("--robot", bench_robot, "robot name or descriptor path");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint with mean actions");
  add_common(eval);
  std::string checkpoint, trajectories;
  int64_t episodes = 64;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "parallel evaluation episodes");
  eval->add_option("--trajectories", trajectories, "write per-step trajectory CSV here");

  CLI::App* list = app.add_subcommand("list-robots", "List bundled robot models");
  (void)list;

  try {
    app.parse(argc, argv);

    if (train->parsed()) return cmd_train(config_path, overrides);
    if (bench->parsed()) {
      if (!bench_mode.empty()) overrides.push_back("bench.mode=" + bench_mode);
      if (bench_envs > 0) overrides.push_back("env.n_envs=" + std::to_string(bench_envs));
      if (bench_steps > 0) overrides.push_back("bench.total_steps=" + std::to_string(bench_steps));
      if (bench_runs > 0) overrides.push_back("bench.runs=" + std::to_string(bench_runs));
      if (!bench_task.empty()) overrides.push_back("env.task=" + bench_task);
      if (!bench_robot.empty()) overrides.push_back("robots=[\"" + bench_robot + "\"]");
      return cmd_bench(config_path, overrides);
    }
    if (eval->parsed()) {
      return cmd_eval(config_path, overrides, checkpoint, episodes, trajectories);
    }
    return cmd_list_robots();
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  } catch (const scalpel::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
