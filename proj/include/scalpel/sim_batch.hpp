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
#include "scalpel/rng.hpp"
#include "scalpel/robot_model.hpp"

namespace scalpel {

// Structure-of-arrays joint state for N parallel environments. Rows are
// independent; the stepping loop owns the batch exclusively between steps.
struct SimBatch {
  MatrixXdR q;         // N x dof, rad or m
  MatrixXdR qdot;      // N x dof, rad/s or m/s
  MatrixXdR q_target;  // N x dof, PD position targets
  std::vector<Pcg32> rng;  // one stream per row

  int64_t rows() const { return q.rows(); }
  int dof() const { return static_cast<int>(q.cols()); }

  // All rows start at the mid-range configuration, at rest. stream_salt
  // separates RNG streams when several batches share one seed (multi-tool).
  static SimBatch create(const RobotModel& model, int64_t n_envs, uint64_t seed,
                         uint64_t stream_salt = 0);
};

}  // namespace scalpel
