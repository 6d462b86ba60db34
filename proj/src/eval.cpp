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

#include "scalpel/eval.hpp"

#include <ostream>

#include "scalpel/errors.hpp"

namespace scalpel {

EvalSummary evaluate_policy(VecTaskEnv& env, const Policy& policy, ThreadPool* pool,
                            std::ostream* trajectory_csv) {
  if (policy.obs_dim() != env.obs_dim() || policy.action_dim() != env.action_dim()) {
    throw ConfigError("checkpoint does not match the environment: policy is " +
                      std::to_string(policy.obs_dim()) + "x" + std::to_string(policy.action_dim()) +
                      ", environment needs " + std::to_string(env.obs_dim()) + "x" +
                      std::to_string(env.action_dim()));
  }
  const int64_t n = env.n_envs();
  const int steps = env.config().episode_len;
  const int tools = env.tool_count();

  if (trajectory_csv != nullptr) {
    *trajectory_csv << "episode,step";
    for (int t = 0; t < tools; ++t) {
      for (int d = 0; d < env.model(t).dof_count; ++d) {
        *trajectory_csv << ",q" << (tools > 1 ? std::to_string(t) + "_" : "") << d;
      }
    }
    for (int t = 0; t < tools; ++t) {
      const std::string tag = tools > 1 ? std::to_string(t) : "";
      *trajectory_csv << ",tip" << tag << "_x,tip" << tag << "_y,tip" << tag << "_z";
    }
    if (env.layout().find("goal") != nullptr || env.layout().find("waypoint") != nullptr) {
      for (int t = 0; t < tools; ++t) {
        const std::string tag = tools > 1 ? std::to_string(t) : "";
        *trajectory_csv << ",goal" << tag << "_x,goal" << tag << "_y,goal" << tag << "_z";
      }
    }
    *trajectory_csv << ",reward\n";
  }

  MatrixXdR obs = env.reset();
  MatrixXdR mean;
  Eigen::VectorXd value;
  Eigen::VectorXd episode_reward = Eigen::VectorXd::Zero(n);

  for (int step = 0; step < steps; ++step) {
    policy.forward(obs, mean, value, nullptr, nullptr, pool);
    const StepResult& result = env.step(mean);
    episode_reward += result.rewards;

    if (trajectory_csv != nullptr) {
      const ObservationLayout::Field* fq = env.layout().find("dof_pos");
      const ObservationLayout::Field* ftip = env.layout().find("tip_pos");
      const ObservationLayout::Field* fgoal = env.layout().find("goal");
      if (fgoal == nullptr) fgoal = env.layout().find("waypoint");
      for (int64_t e = 0; e < n; ++e) {
        // Ended rows were already reset; their pre-reset state is in
        // terminal_observations.
        const bool ended = result.terminated[e] || result.timed_out[e];
        const auto& src = ended ? result.terminal_observations : result.observations;
        *trajectory_csv << e << "," << step;
        for (int k = 0; k < fq->length; ++k) *trajectory_csv << "," << src(e, fq->offset + k);
        for (int k = 0; k < ftip->length; ++k) *trajectory_csv << "," << src(e, ftip->offset + k);
        if (fgoal != nullptr) {
          for (int k = 0; k < fgoal->length; ++k) {
            *trajectory_csv << "," << src(e, fgoal->offset + k);
          }
        }
        *trajectory_csv << "," << result.rewards[e] << "\n";
      }
    }
    obs = result.observations;
  }

  EvalSummary summary;
  summary.episodes = n;
  summary.mean_final_error = env.task_error().mean();
  summary.mean_episode_reward = episode_reward.mean();
  for (int64_t e = 0; e < n; ++e) {
    if (env.task_error()[e] < env.config().success_radius) ++summary.goal_reached;
  }
  return summary;
}

}  // namespace scalpel
