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

#include "scalpel/geometry.hpp"

namespace scalpel {

// Fixed-capacity on-policy store: exactly n_robots * n_steps slots, laid out
// time-major (slot = step * n_robots + env). Termination and timeout flags
// are kept separate; timed-out slots carry the critic's bootstrap value of
// the pre-reset next state.
struct RolloutBuffer {
  int64_t n_robots = 0;
  int n_steps = 0;

  MatrixXdR obs;                     // B x obs_dim
  MatrixXdR actions;                 // B x action_dim (raw Gaussian samples)
  Eigen::VectorXd log_probs;         // B
  Eigen::VectorXd rewards;           // B
  Eigen::VectorXd values;            // B, V(s_t)
  std::vector<uint8_t> terminated;   // B
  std::vector<uint8_t> timed_out;    // B
  Eigen::VectorXd bootstrap_values;  // B, V(s_{t+1}) where timed_out, else 0
  Eigen::VectorXd advantages;        // B, filled by compute_gae
  Eigen::VectorXd returns;           // B, filled by compute_gae
  Eigen::VectorXd last_values;       // n_robots, V of the state after the final step

  int64_t size() const { return n_robots * n_steps; }
  int64_t slot(int step, int64_t env) const { return static_cast<int64_t>(step) * n_robots + env; }

  static RolloutBuffer create(int64_t n_robots, int n_steps, int obs_dim, int action_dim);
};

// Backward GAE recursion. Terminated slots mask the next value; timed-out
// slots have their reward augmented by gamma * bootstrap_value and are then
// treated as terminal. returns = advantages + values, computed before the
// optional batch normalization of the advantages.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda, bool normalize = true);

}  // namespace scalpel
