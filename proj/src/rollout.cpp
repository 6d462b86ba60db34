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

#include "scalpel/rollout.hpp"

#include <cmath>

#include "scalpel/errors.hpp"

namespace scalpel {

RolloutBuffer RolloutBuffer::create(int64_t n_robots, int n_steps, int obs_dim, int action_dim) {
  RolloutBuffer b;
  b.n_robots = n_robots;
  b.n_steps = n_steps;
  const int64_t cap = n_robots * n_steps;
  b.obs = MatrixXdR::Zero(cap, obs_dim);
  b.actions = MatrixXdR::Zero(cap, action_dim);
  b.log_probs = Eigen::VectorXd::Zero(cap);
  b.rewards = Eigen::VectorXd::Zero(cap);
  b.values = Eigen::VectorXd::Zero(cap);
  b.terminated.assign(cap, 0);
  b.timed_out.assign(cap, 0);
  b.bootstrap_values = Eigen::VectorXd::Zero(cap);
  b.advantages = Eigen::VectorXd::Zero(cap);
  b.returns = Eigen::VectorXd::Zero(cap);
  b.last_values = Eigen::VectorXd::Zero(n_robots);
  return b;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda, bool normalize) {
  const int64_t n = buffer.n_robots;
  const int steps = buffer.n_steps;

  for (int64_t e = 0; e < n; ++e) {
    double running = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
      const int64_t k = buffer.slot(t, e);
      const bool term = buffer.terminated[k] != 0;
      const bool timeout = buffer.timed_out[k] != 0;
      double delta;
      if (term) {
        delta = buffer.rewards[k] - buffer.values[k];
      } else if (timeout) {
        delta = buffer.rewards[k] + gamma * buffer.bootstrap_values[k] - buffer.values[k];
      } else {
        const double v_next =
            t == steps - 1 ? buffer.last_values[e] : buffer.values[buffer.slot(t + 1, e)];
        delta = buffer.rewards[k] + gamma * v_next - buffer.values[k];
      }
      running = term || timeout ? delta : delta + gamma * lambda * running;
      buffer.advantages[k] = running;
      buffer.returns[k] = running + buffer.values[k];
    }
  }

  if (!buffer.advantages.allFinite()) throw SimError("compute_gae: non-finite advantages");

  if (normalize) {
    const int64_t cap = buffer.size();
    const double mean = buffer.advantages.mean();
    const double var = (buffer.advantages.array() - mean).square().sum() / cap;
    const double std = std::sqrt(var);
    buffer.advantages = (buffer.advantages.array() - mean) / (std + 1e-8);
  }
}

}  // namespace scalpel
