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

#include "scalpel/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "scalpel/errors.hpp"
#include "scalpel/thread_pool.hpp"

namespace scalpel {

namespace {

constexpr int64_t kRowGrain = 2048;
constexpr char kCheckpointMagic[8] = {'S', 'C', 'L', 'P', 'C', 'K', 'P', '1'};
constexpr uint32_t kCheckpointVersion = 1;

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
// Derivative from the post-activation value: elu'(x) = 1 (x>0) else elu(x)+1.
inline double elu_grad_from_act(double y) { return y > 0.0 ? 1.0 : y + 1.0; }

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

}  // namespace

Policy::Policy(int obs_dim, int action_dim, std::vector<int> hidden)
    : obs_dim_(obs_dim), action_dim_(action_dim), hidden_(std::move(hidden)) {
  if (obs_dim_ < 1 || action_dim_ < 1) throw ConfigError("policy: bad dimensions");
  if (hidden_.empty()) throw ConfigError("policy: at least one hidden layer required");

  int64_t off = 0;
  for (int trunk = 0; trunk < 2; ++trunk) {
    const int out_dim = trunk == 0 ? action_dim_ : 1;
    int in = obs_dim_;
    for (size_t l = 0; l <= hidden_.size(); ++l) {
      const int out = l < hidden_.size() ? hidden_[l] : out_dim;
      weights_[trunk].push_back({off, out, in});
      off += static_cast<int64_t>(out) * in;
      biases_[trunk].push_back({off, out, 1});
      off += out;
      in = out;
    }
  }
  log_std_offset_ = off;
  off += action_dim_;
  params_ = Eigen::VectorXd::Zero(off);
}

Eigen::Map<MatrixXdR> Policy::weight(Eigen::VectorXd& flat, bool critic, int layer) const {
  const TensorRef& r = weights_[critic ? 1 : 0][layer];
  return Eigen::Map<MatrixXdR>(flat.data() + r.offset, r.rows, r.cols);
}

Eigen::Map<const MatrixXdR> Policy::weight(const Eigen::VectorXd& flat, bool critic,
                                           int layer) const {
  const TensorRef& r = weights_[critic ? 1 : 0][layer];
  return Eigen::Map<const MatrixXdR>(flat.data() + r.offset, r.rows, r.cols);
}

Eigen::Map<Eigen::VectorXd> Policy::bias(Eigen::VectorXd& flat, bool critic, int layer) const {
  const TensorRef& r = biases_[critic ? 1 : 0][layer];
  return Eigen::Map<Eigen::VectorXd>(flat.data() + r.offset, r.rows);
}

Eigen::Map<const Eigen::VectorXd> Policy::bias(const Eigen::VectorXd& flat, bool critic,
                                               int layer) const {
  const TensorRef& r = biases_[critic ? 1 : 0][layer];
  return Eigen::Map<const Eigen::VectorXd>(flat.data() + r.offset, r.rows);
}

void Policy::init_params(uint64_t seed, double init_log_std) {
  Pcg32 rng = make_stream(seed, 0x9019);
  params_.setZero();
  for (int trunk = 0; trunk < 2; ++trunk) {
    for (int l = 0; l < layer_count(); ++l) {
      auto w = weight(params_, trunk == 1, l);
      const double scale = std::sqrt(2.0 / w.cols());
      for (int r = 0; r < w.rows(); ++r) {
        for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
      }
      // Small final layer keeps initial actions and values near zero.
      if (l == layer_count() - 1) w *= 0.01;
    }
  }
  params_.segment(log_std_offset_, action_dim_).setConstant(init_log_std);
}

Eigen::VectorXd Policy::log_std() const {
  return params_.segment(log_std_offset_, action_dim_)
      .cwiseMax(kLogStdMin)
      .cwiseMin(kLogStdMax);
}

void Policy::trunk_forward(bool critic, const Eigen::Ref<const MatrixXdR>& obs, MatrixXdR& out,
                           MlpCache* cache, ThreadPool* pool) const {
  const int64_t n = obs.rows();
  const int trunk = critic ? 1 : 0;
  const int layers = layer_count();

  MlpCache local;
  MlpCache& c = cache != nullptr ? *cache : local;
  c.acts.resize(layers - 1);
  for (int l = 0; l < layers - 1; ++l) c.acts[l].resize(n, hidden_[l]);
  out.resize(n, weights_[trunk].back().rows);

  auto body = [&](int64_t begin, int64_t end) {
    const int64_t rows = end - begin;
    for (int l = 0; l < layers; ++l) {
      auto w = weight(params_, critic, l);
      auto b = bias(params_, critic, l);
      auto dst = l == layers - 1 ? out.middleRows(begin, rows)
                                 : c.acts[l].middleRows(begin, rows);
      if (l == 0) {
        dst.noalias() = obs.middleRows(begin, rows) * w.transpose();
      } else {
        dst.noalias() = c.acts[l - 1].middleRows(begin, rows) * w.transpose();
      }
      dst.rowwise() += b.transpose();
      if (l < layers - 1) {
        dst = dst.unaryExpr([](double x) { return elu(x); });
      }
    }
  };
  if (pool != nullptr) {
    pool->parallel_for(n, kRowGrain, body);
  } else {
    body(0, n);
  }
}

void Policy::forward(const Eigen::Ref<const MatrixXdR>& obs, MatrixXdR& mean,
                     Eigen::VectorXd& value, MlpCache* actor_cache, MlpCache* critic_cache,
                     ThreadPool* pool) const {
  if (obs.cols() != obs_dim_) throw SimError("policy.forward: observation width mismatch");
  if (!obs.allFinite()) throw SimError("policy.forward: non-finite observation");

  trunk_forward(false, obs, mean, actor_cache, pool);
  MatrixXdR value_col;
  trunk_forward(true, obs, value_col, critic_cache, pool);
  value = value_col.col(0);

  if (!mean.allFinite() || !value.allFinite()) {
    throw SimError("policy.forward: non-finite activation");
  }
}

void Policy::backward(const Eigen::Ref<const MatrixXdR>& obs, const MlpCache& actor_cache,
                      const MlpCache& critic_cache, const MatrixXdR& dmean,
                      const Eigen::VectorXd& dvalue, Eigen::VectorXd& grad,
                      ThreadPool* pool) const {
  const int64_t n = obs.rows();
  if (grad.size() != params_.size()) throw SimError("policy.backward: grad size mismatch");
  const int layers = layer_count();
  const int64_t chunks = (n + kRowGrain - 1) / kRowGrain;

  // Per-chunk parameter-gradient partials, reduced in chunk order below.
  std::vector<Eigen::VectorXd> partials(chunks);

  auto run_trunk = [&](bool critic, const MlpCache& cache, const MatrixXdR& dout_full) {
    auto body = [&](int64_t begin, int64_t end) {
      const int64_t chunk = begin / kRowGrain;
      Eigen::VectorXd& partial = partials[chunk];
      const int64_t rows = end - begin;

      MatrixXdR dy = dout_full.middleRows(begin, rows);
      for (int l = layers - 1; l >= 0; --l) {
        auto dw = weight(partial, critic, l);
        auto db = bias(partial, critic, l);
        Eigen::Ref<const MatrixXdR> x =
            l == 0 ? Eigen::Ref<const MatrixXdR>(obs.middleRows(begin, rows))
                   : Eigen::Ref<const MatrixXdR>(cache.acts[l - 1].middleRows(begin, rows));
        dw.noalias() += dy.transpose() * x;
        db.noalias() += dy.colwise().sum().transpose();
        if (l > 0) {
          auto w = weight(params_, critic, l);
          MatrixXdR dx = dy * w;
          const auto& act = cache.acts[l - 1];
          dy.resize(rows, act.cols());
          for (int64_t r = 0; r < rows; ++r) {
            for (int cidx = 0; cidx < act.cols(); ++cidx) {
              dy(r, cidx) = dx(r, cidx) * elu_grad_from_act(act(begin + r, cidx));
            }
          }
        }
      }
    };
    if (pool != nullptr) {
      pool->parallel_for(n, kRowGrain, body);
    } else {
      for (int64_t c = 0; c < chunks; ++c) {
        body(c * kRowGrain, std::min(n, (c + 1) * kRowGrain));
      }
    }
  };

  for (int64_t c = 0; c < chunks; ++c) partials[c] = Eigen::VectorXd::Zero(params_.size());
  run_trunk(false, actor_cache, dmean);
  MatrixXdR dvalue_col = dvalue;
  run_trunk(true, critic_cache, dvalue_col);

  for (int64_t c = 0; c < chunks; ++c) grad += partials[c];
}

void save_checkpoint(const std::string& path, const Policy& policy, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write checkpoint '" + path + "'");
  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&](uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_str = [&](const std::string& s) {
    put_u32(static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };

  out.write(kCheckpointMagic, 8);
  put_u32(kCheckpointVersion);
  put_u32(static_cast<uint32_t>(policy.obs_dim()));
  put_u32(static_cast<uint32_t>(policy.action_dim()));
  put_u32(static_cast<uint32_t>(policy.hidden().size()));
  for (int h : policy.hidden()) put_u32(static_cast<uint32_t>(h));
  put_str(meta.robot);
  put_str(meta.task);
  put_u64(static_cast<uint64_t>(policy.param_count()));
  out.write(reinterpret_cast<const char*>(policy.params().data()),
            static_cast<std::streamsize>(policy.param_count() * sizeof(double)));
  if (!out) throw SimError("short write on checkpoint '" + path + "'");
}

Policy load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  auto get_u32 = [&]() {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_u64 = [&]() {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto get_str = [&]() {
    uint32_t len = get_u32();
    if (len > (1u << 20)) throw ConfigError("corrupt checkpoint '" + path + "'");
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
  };

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw ConfigError("'" + path + "' is not a scalpel checkpoint");
  }
  uint32_t version = get_u32();
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint '" + path + "' has unsupported version " +
                      std::to_string(version));
  }
  const int obs_dim = static_cast<int>(get_u32());
  const int action_dim = static_cast<int>(get_u32());
  const uint32_t n_hidden = get_u32();
  if (n_hidden > 64) throw ConfigError("corrupt checkpoint '" + path + "'");
  std::vector<int> hidden(n_hidden);
  for (auto& h : hidden) h = static_cast<int>(get_u32());
  CheckpointMeta m;
  m.robot = get_str();
  m.task = get_str();

  Policy policy(obs_dim, action_dim, hidden);
  const uint64_t count = get_u64();
  if (count != static_cast<uint64_t>(policy.param_count())) {
    throw ConfigError("checkpoint '" + path + "' parameter count does not match its shape header");
  }
  in.read(reinterpret_cast<char*>(policy.params().data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw ConfigError("checkpoint '" + path + "' is truncated");
  if (meta != nullptr) *meta = m;
  return policy;
}

}  // namespace scalpel
