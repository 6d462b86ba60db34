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

#include <iosfwd>

#include "scalpel/envs.hpp"
#include "scalpel/policy.hpp"

namespace scalpel {

struct EvalSummary {
  int64_t episodes = 0;
  double mean_final_error = 0.0;    // task error at the last step, averaged over envs
  double mean_episode_reward = 0.0;
  int64_t goal_reached = 0;         // envs whose final error is inside success_radius
};

// Deterministic mean-action episodes: one episode per env row, run for the
// full episode length (configure success_hold > episode_len so terminations
// do not reset rows mid-episode). When trajectory_csv is non-null, writes one
// row per (episode, step): q, tip positions, goals, reward.
EvalSummary evaluate_policy(VecTaskEnv& env, const Policy& policy, ThreadPool* pool = nullptr,
                            std::ostream* trajectory_csv = nullptr);

}  // namespace scalpel
