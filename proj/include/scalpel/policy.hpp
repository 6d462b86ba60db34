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
#include <string>
#include <vector>

#include "scalpel/geometry.hpp"
#include "scalpel/rng.hpp"

namespace scalpel {

class ThreadPool;

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

// Post-activation caches for one trunk, reused across calls.
struct MlpCache {
  std::vector<MatrixXdR> acts;  // hidden activations, one B x width per hidden layer
};

// Actor-critic MLP with ELU hidden activations. Actor and critic share the
// trunk shape but not parameters; a global log-std vector parameterizes the
// diagonal Gaussian. All parameters live in one flat vector so the optimizer,
// finite-difference probes, and checkpoints can treat them uniformly.
//
// Forward and backward are row-chunked with a fixed grain, so results are
// identical for any worker count.
class Policy {
 public:
  Policy(int obs_dim, int action_dim, std::vector<int> hidden = {256, 128, 64});

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  int64_t param_count() const { return params_.size(); }

  // Scaled-normal weights, zero biases, log-std at init_log_std.
  void init_params(uint64_t seed, double init_log_std = -1.0);

  // Clamped log-std and matching std vector.
  Eigen::VectorXd log_std() const;

  // mean: B x action_dim, value: B. Caches may be null when no backward pass
  // follows. Fails fast on non-finite activations.
  void forward(const Eigen::Ref<const MatrixXdR>& obs, MatrixXdR& mean, Eigen::VectorXd& value,
               MlpCache* actor_cache = nullptr, MlpCache* critic_cache = nullptr,
               ThreadPool* pool = nullptr) const;

  // Accumulates dL/dparams into `grad` given upstream dL/dmean and dL/dvalue.
  // Caches must come from a forward() over the same obs.
  void backward(const Eigen::Ref<const MatrixXdR>& obs, const MlpCache& actor_cache,
                const MlpCache& critic_cache, const MatrixXdR& dmean,
                const Eigen::VectorXd& dvalue, Eigen::VectorXd& grad,
                ThreadPool* pool = nullptr) const;

  // Flat-vector offsets (actor layers, then critic layers, then log-std).
  int64_t log_std_offset() const { return log_std_offset_; }

  // Layer views over an arbitrary flat vector with this policy's layout.
  Eigen::Map<MatrixXdR> weight(Eigen::VectorXd& flat, bool critic, int layer) const;
  Eigen::Map<const MatrixXdR> weight(const Eigen::VectorXd& flat, bool critic, int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(Eigen::VectorXd& flat, bool critic, int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Eigen::VectorXd& flat, bool critic,
                                         int layer) const;
  int layer_count() const { return static_cast<int>(hidden_.size()) + 1; }

 private:
  struct TensorRef {
    int64_t offset = 0;
    int rows = 0;
    int cols = 0;
  };

  void trunk_forward(bool critic, const Eigen::Ref<const MatrixXdR>& obs, MatrixXdR& out,
                     MlpCache* cache, ThreadPool* pool) const;

  int obs_dim_;
  int action_dim_;
  std::vector<int> hidden_;
  std::vector<TensorRef> weights_[2];  // [actor, critic]
  std::vector<TensorRef> biases_[2];
  int64_t log_std_offset_ = 0;
  Eigen::VectorXd params_;
};

struct CheckpointMeta {
  std::string robot;
  std::string task;
};

// Versioned binary checkpoint: magic, version, shape header, then the flat
// parameter vector as little-endian 64-bit floats (see docs/formats.md).
void save_checkpoint(const std::string& path, const Policy& policy, const CheckpointMeta& meta);
Policy load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace scalpel
