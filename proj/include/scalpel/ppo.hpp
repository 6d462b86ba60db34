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

#include <functional>

#include "scalpel/envs.hpp"
#include "scalpel/policy.hpp"
#include "scalpel/rollout.hpp"

namespace scalpel {

struct TrainConfig {
  double gamma = 0.99;
  double lam = 0.95;  // GAE lambda
  double clip_eps = 0.2;
  double learning_rate = 3e-4;
  int epochs = 5;
  int minibatch_count = 4;
  double value_coef = 1.0;
  double entropy_coef = 0.0;
  double max_grad_norm = 1.0;
  int64_t total_env_steps = 2'000'000;
  int n_steps = 32;        // >= 25: the GAE horizon floor
  int64_t n_robots = 1024;
  double init_log_std = -1.0;
  int checkpoint_interval = 20;  // iterations; 0 disables periodic checkpoints
  bool timeout_bootstrap = true;
  uint64_t seed = 0;

  int64_t batch_size() const { return n_robots * n_steps; }
  void validate() const;  // throws ConfigError
};

// Adaptive-moment first-order optimizer with bias correction:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
class Adam {
 public:
  Adam(int64_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

struct PpoMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;            // mean(old_logp - new_logp)
  double clip_fraction = 0.0;
};

// Clipped-surrogate loss and its analytic gradient over one minibatch view.
// Rows of obs/actions plus old log-probs, normalized advantages, and returns
// must correspond. Returns the scalar loss; accumulates into grad.
double ppo_loss_and_grad(const Policy& policy, const Eigen::Ref<const MatrixXdR>& obs,
                         const Eigen::Ref<const MatrixXdR>& actions,
                         const Eigen::Ref<const Eigen::VectorXd>& old_log_probs,
                         const Eigen::Ref<const Eigen::VectorXd>& advantages,
                         const Eigen::Ref<const Eigen::VectorXd>& returns, const TrainConfig& cfg,
                         Eigen::VectorXd& grad, PpoMetrics* metrics = nullptr,
                         ThreadPool* pool = nullptr);

// Epochs x shuffled mini-batches of gradient ascent on the clipped surrogate
// (minus value loss, plus entropy bonus). Advantages must be computed.
// Throws SimError with batch statistics if the loss goes non-finite.
PpoMetrics ppo_update(Policy& policy, const RolloutBuffer& buffer, const TrainConfig& cfg,
                      Adam& adam, Pcg32& rng, ThreadPool* pool = nullptr);

// Diagonal-Gaussian log-density of `action` under (mean, log_std).
double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& action);

struct IterationStats {
  int64_t iteration = 0;
  int64_t env_steps = 0;         // aggregate transitions so far
  int64_t episodes_completed = 0;  // during this iteration
  double mean_episode_reward = 0.0;  // NaN when no episode completed
  double mean_final_error = 0.0;     // NaN when no episode completed
  double mean_step_reward = 0.0;
  PpoMetrics ppo;
  double log_std_mean = 0.0;
  double fps = 0.0;          // wall-clock field
  double wall_time_s = 0.0;  // wall-clock field
  int64_t action_saturations = 0;
};

// Rollout collection + PPO update loop over a batched environment.
class Trainer {
 public:
  Trainer(BatchedEnv& env, Policy& policy, TrainConfig cfg, ThreadPool* pool = nullptr);

  // One rollout (n_steps across all envs) + one ppo_update.
  IterationStats iterate();

  // Runs iterations until total_env_steps transitions are collected.
  // on_iteration may be null. on_first_step fires right after the first env
  // transition of the run (the benchmark warmup boundary).
  void run(const std::function<void(const IterationStats&)>& on_iteration,
           const std::function<void()>& on_first_step = nullptr);

  const RolloutBuffer& buffer() const { return buffer_; }
  int64_t env_steps() const { return env_steps_; }

 private:
  BatchedEnv& env_;
  Policy& policy_;
  TrainConfig cfg_;
  ThreadPool* pool_;
  RolloutBuffer buffer_;
  Adam adam_;
  Pcg32 rng_;
  MatrixXdR obs_;
  MatrixXdR mean_;
  Eigen::VectorXd value_;
  MatrixXdR actions_;
  Eigen::VectorXd ep_reward_acc_;
  int64_t env_steps_ = 0;
  int64_t iteration_ = 0;
  bool first_step_done_ = false;
  std::function<void()> on_first_step_;
};

}  // namespace scalpel
