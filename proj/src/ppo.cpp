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

#include "scalpel/ppo.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "scalpel/errors.hpp"
#include "scalpel/thread_pool.hpp"

namespace scalpel {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)
}

void TrainConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("train.gamma must be in [0, 1]");
  if (lam < 0.0 || lam > 1.0) throw ConfigError("train.lambda must be in [0, 1]");
  if (!(clip_eps > 0.0)) throw ConfigError("train.clip_eps must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (minibatch_count < 1) throw ConfigError("train.minibatch_count must be >= 1");
  if (max_grad_norm < 0.0) throw ConfigError("train.max_grad_norm must be >= 0");
  if (total_env_steps < 1) throw ConfigError("train.total_env_steps must be >= 1");
  if (n_steps < 25) throw ConfigError("train.n_steps must be >= 25 (GAE horizon floor)");
  if (n_robots < 1) throw ConfigError("train.n_robots must be >= 1");
  if (value_coef < 0.0) throw ConfigError("train.value_coef must be >= 0");
  if (entropy_coef < 0.0) throw ConfigError("train.entropy_coef must be >= 0");
  if (checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval must be >= 0");
  if (minibatch_count > batch_size()) {
    throw ConfigError("train.minibatch_count exceeds the batch size");
  }
}

Adam::Adam(int64_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_ = Eigen::VectorXd::Zero(n);
  v_ = Eigen::VectorXd::Zero(n);
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& action) {
  double logp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    logp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return logp;
}

double ppo_loss_and_grad(const Policy& policy, const Eigen::Ref<const MatrixXdR>& obs,
                         const Eigen::Ref<const MatrixXdR>& actions,
                         const Eigen::Ref<const Eigen::VectorXd>& old_log_probs,
                         const Eigen::Ref<const Eigen::VectorXd>& advantages,
                         const Eigen::Ref<const Eigen::VectorXd>& returns, const TrainConfig& cfg,
                         Eigen::VectorXd& grad, PpoMetrics* metrics, ThreadPool* pool) {
  const int64_t n = obs.rows();
  const int act_dim = policy.action_dim();

  MlpCache actor_cache, critic_cache;
  MatrixXdR mean;
  Eigen::VectorXd value;
  policy.forward(obs, mean, value, &actor_cache, &critic_cache, pool);

  const Eigen::VectorXd log_std = policy.log_std();
  const Eigen::VectorXd inv_var = (-2.0 * log_std.array()).exp();

  MatrixXdR dmean = MatrixXdR::Zero(n, act_dim);
  Eigen::VectorXd dvalue(n);
  Eigen::VectorXd dlog_std = Eigen::VectorXd::Zero(act_dim);

  double surr_sum = 0.0, kl_sum = 0.0, value_sq_sum = 0.0;
  int64_t clipped = 0;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int64_t j = 0; j < n; ++j) {
    double logp = 0.0;
    for (int i = 0; i < act_dim; ++i) {
      const double diff = actions(j, i) - mean(j, i);
      logp += -0.5 * diff * diff * inv_var[i] - log_std[i] - kHalfLog2Pi;
    }
    const double ratio = std::exp(logp - old_log_probs[j]);
    const double adv = advantages[j];
    const double unclipped = ratio * adv;
    const double clipped_ratio =
        std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    const double clipped_obj = clipped_ratio * adv;
    surr_sum += std::min(unclipped, clipped_obj);
    kl_sum += old_log_probs[j] - logp;
    if (std::abs(ratio - 1.0) > cfg.clip_eps) ++clipped;

    // d(-surr)/dlogp; zero when the clipped branch is active.
    const double dsurr_dlogp = unclipped <= clipped_obj ? unclipped : 0.0;
    const double dl_dlogp = -inv_n * dsurr_dlogp;
    for (int i = 0; i < act_dim; ++i) {
      const double diff = actions(j, i) - mean(j, i);
      dmean(j, i) = dl_dlogp * diff * inv_var[i];
      dlog_std[i] += dl_dlogp * (diff * diff * inv_var[i] - 1.0);
    }

    const double verr = value[j] - returns[j];
    value_sq_sum += verr * verr;
    dvalue[j] = cfg.value_coef * verr * inv_n;
  }

  const double policy_loss = -surr_sum * inv_n;
  const double value_loss = 0.5 * value_sq_sum * inv_n;
  double entropy = 0.0;
  for (int i = 0; i < act_dim; ++i) entropy += log_std[i] + 0.5 + kHalfLog2Pi;
  dlog_std.array() -= cfg.entropy_coef;

  // The log-std clamp is a projection: no gradient outside the box.
  const int64_t ls_off = policy.log_std_offset();
  for (int i = 0; i < act_dim; ++i) {
    const double raw = policy.params()[ls_off + i];
    if (raw < kLogStdMin || raw > kLogStdMax) dlog_std[i] = 0.0;
  }

  policy.backward(obs, actor_cache, critic_cache, dmean, dvalue, grad, pool);
  grad.segment(ls_off, act_dim) += dlog_std;

  if (metrics != nullptr) {
    metrics->policy_loss = policy_loss;
    metrics->value_loss = value_loss;
    metrics->entropy = entropy;
    metrics->kl = kl_sum * inv_n;
    metrics->clip_fraction = static_cast<double>(clipped) * inv_n;
  }
  return policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;
}

PpoMetrics ppo_update(Policy& policy, const RolloutBuffer& buffer, const TrainConfig& cfg,
                      Adam& adam, Pcg32& rng, ThreadPool* pool) {
  const int64_t cap = buffer.size();
  const int64_t mb_size = (cap + cfg.minibatch_count - 1) / cfg.minibatch_count;
  const int obs_dim = static_cast<int>(buffer.obs.cols());
  const int act_dim = static_cast<int>(buffer.actions.cols());

  std::vector<int64_t> indices(cap);
  for (int64_t i = 0; i < cap; ++i) indices[i] = i;

  MatrixXdR mb_obs(mb_size, obs_dim), mb_actions(mb_size, act_dim);
  Eigen::VectorXd mb_logp(mb_size), mb_adv(mb_size), mb_ret(mb_size);
  Eigen::VectorXd grad(policy.param_count());

  PpoMetrics total;
  int updates = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int64_t i = cap - 1; i > 0; --i) {
      const int64_t j = rng.next_u32() % static_cast<uint32_t>(i + 1);
      std::swap(indices[i], indices[j]);
    }
    for (int64_t start = 0; start < cap; start += mb_size) {
      const int64_t count = std::min(mb_size, cap - start);
      for (int64_t k = 0; k < count; ++k) {
        const int64_t src = indices[start + k];
        mb_obs.row(k) = buffer.obs.row(src);
        mb_actions.row(k) = buffer.actions.row(src);
        mb_logp[k] = buffer.log_probs[src];
        mb_adv[k] = buffer.advantages[src];
        mb_ret[k] = buffer.returns[src];
      }
      grad.setZero();
      PpoMetrics m;
      const double loss = ppo_loss_and_grad(
          policy, mb_obs.topRows(count), mb_actions.topRows(count), mb_logp.head(count),
          mb_adv.head(count), mb_ret.head(count), cfg, grad, &m, pool);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss (adv mean " << mb_adv.head(count).mean()
            << ", ret mean " << mb_ret.head(count).mean() << ", logp mean "
            << mb_logp.head(count).mean() << ", minibatch " << count << ")";
        throw SimError(msg.str());
      }
      if (cfg.max_grad_norm > 0.0) {
        const double norm = grad.norm();
        if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
      }
      adam.step(policy.params(), grad);
      auto ls = policy.params().segment(policy.log_std_offset(), act_dim);
      ls = ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);

      total.policy_loss += m.policy_loss;
      total.value_loss += m.value_loss;
      total.entropy += m.entropy;
      total.kl += m.kl;
      total.clip_fraction += m.clip_fraction;
      ++updates;
    }
  }

  total.policy_loss /= updates;
  total.value_loss /= updates;
  total.entropy /= updates;
  total.kl /= updates;
  total.clip_fraction /= updates;
  return total;
}

Trainer::Trainer(BatchedEnv& env, Policy& policy, TrainConfig cfg, ThreadPool* pool)
    : env_(env),
      policy_(policy),
      cfg_(cfg),
      pool_(pool),
      buffer_(RolloutBuffer::create(cfg.n_robots, cfg.n_steps, env.obs_dim(), env.action_dim())),
      adam_(policy.param_count(), cfg.learning_rate),
      rng_(make_stream(cfg.seed, 0x7261696e)) {
  cfg_.validate();
  if (env_.n_envs() != cfg_.n_robots) {
    throw ConfigError("train.n_robots (" + std::to_string(cfg_.n_robots) +
                      ") must match the environment batch (" + std::to_string(env_.n_envs()) +
                      ")");
  }
  ep_reward_acc_ = Eigen::VectorXd::Zero(cfg_.n_robots);
}

IterationStats Trainer::iterate() {
  const auto t_begin = std::chrono::steady_clock::now();
  const int64_t n = cfg_.n_robots;
  const int act_dim = env_.action_dim();

  if (obs_.rows() == 0) obs_ = env_.reset();

  const Eigen::VectorXd log_std = policy_.log_std();
  const Eigen::VectorXd sigma = log_std.array().exp();
  double reward_sum = 0.0;
  double ep_reward_sum = 0.0, ep_error_sum = 0.0;
  int64_t episodes = 0, saturations = 0;

  actions_.resize(n, act_dim);
  std::vector<int64_t> boot_rows;
  MatrixXdR boot_obs;
  MatrixXdR boot_mean;
  Eigen::VectorXd boot_value;

  for (int t = 0; t < cfg_.n_steps; ++t) {
    policy_.forward(obs_, mean_, value_, nullptr, nullptr, pool_);

    const int64_t base = buffer_.slot(t, 0);
    for (int64_t e = 0; e < n; ++e) {
      double logp = 0.0;
      for (int i = 0; i < act_dim; ++i) {
        const double z = rng_.normal();
        actions_(e, i) = mean_(e, i) + sigma[i] * z;
        logp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
      }
      buffer_.log_probs[base + e] = logp;
    }
    buffer_.obs.middleRows(base, n) = obs_;
    buffer_.actions.middleRows(base, n) = actions_;
    buffer_.values.segment(base, n) = value_;

    const StepResult& result = env_.step(actions_);
    if (!first_step_done_) {
      first_step_done_ = true;
      if (on_first_step_) on_first_step_();
    }
    saturations += result.action_saturations;

    buffer_.rewards.segment(base, n) = result.rewards;
    boot_rows.clear();
    for (int64_t e = 0; e < n; ++e) {
      buffer_.terminated[base + e] = result.terminated[e];
      buffer_.timed_out[base + e] = result.timed_out[e];
      buffer_.bootstrap_values[base + e] = 0.0;
      if (result.timed_out[e] && !result.terminated[e] && cfg_.timeout_bootstrap) {
        boot_rows.push_back(e);
      }
      reward_sum += result.rewards[e];
      ep_reward_acc_[e] += result.rewards[e];
      if (result.terminated[e] || result.timed_out[e]) {
        ep_reward_sum += ep_reward_acc_[e];
        ep_error_sum += env_.task_error()[e];
        ep_reward_acc_[e] = 0.0;
        ++episodes;
      }
    }
    if (!boot_rows.empty()) {
      boot_obs.resize(static_cast<int64_t>(boot_rows.size()), env_.obs_dim());
      for (size_t k = 0; k < boot_rows.size(); ++k) {
        boot_obs.row(k) = result.terminal_observations.row(boot_rows[k]);
      }
      policy_.forward(boot_obs, boot_mean, boot_value, nullptr, nullptr, pool_);
      for (size_t k = 0; k < boot_rows.size(); ++k) {
        buffer_.bootstrap_values[base + boot_rows[k]] = boot_value[k];
      }
    }
    obs_ = result.observations;
  }
  env_steps_ += n * cfg_.n_steps;

  policy_.forward(obs_, mean_, value_, nullptr, nullptr, pool_);
  buffer_.last_values = value_;

  compute_gae(buffer_, cfg_.gamma, cfg_.lam, true);
  PpoMetrics ppo = ppo_update(policy_, buffer_, cfg_, adam_, rng_, pool_);

  ++iteration_;
  IterationStats stats;
  stats.iteration = iteration_;
  stats.env_steps = env_steps_;
  stats.episodes_completed = episodes;
  stats.mean_episode_reward =
      episodes > 0 ? ep_reward_sum / episodes : std::numeric_limits<double>::quiet_NaN();
  stats.mean_final_error =
      episodes > 0 ? ep_error_sum / episodes : std::numeric_limits<double>::quiet_NaN();
  stats.mean_step_reward = reward_sum / static_cast<double>(n * cfg_.n_steps);
  stats.ppo = ppo;
  stats.log_std_mean = policy_.log_std().mean();
  stats.action_saturations = saturations;
  const auto t_end = std::chrono::steady_clock::now();
  stats.wall_time_s = std::chrono::duration<double>(t_end - t_begin).count();
  stats.fps = static_cast<double>(n * cfg_.n_steps) / stats.wall_time_s;
  return stats;
}

void Trainer::run(const std::function<void(const IterationStats&)>& on_iteration,
                  const std::function<void()>& on_first_step) {
  on_first_step_ = on_first_step;
  while (env_steps_ < cfg_.total_env_steps) {
    IterationStats stats = iterate();
    if (on_iteration) on_iteration(stats);
  }
}

}  // namespace scalpel
