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

#include <cmath>
#include <complex>

#include "doctest.h"
#include "scalpel/dynamics.hpp"
#include "scalpel/errors.hpp"
#include "scalpel/thread_pool.hpp"

using namespace scalpel;

namespace {

// Discrete closed-loop oracle for one PD-driven DoF under semi-implicit
// Euler: state (q, v),
//   v' = v + dt*(kp*(qt - q) - kd*v - c*v)/m
//   q' = q + dt*v'
// Stability requires both eigenvalues of the update matrix inside the unit
// circle; overdamped means real positive poles.
std::pair<std::complex<double>, std::complex<double>> closed_loop_poles(double kp, double kd,
                                                                        double c, double m,
                                                                        double dt) {
  const double a = 1.0 - dt * (kd + c) / m;  // dv/dv
  const double b = -dt * kp / m;             // dv/dq
  // q' = q + dt*v' -> rows: [1 + dt*b, dt*a; b, a]
  Eigen::Matrix2d A;
  A << 1.0 + dt * b, dt * a, b, a;
  Eigen::EigenSolver<Eigen::Matrix2d> es(A);
  return {es.eigenvalues()[0], es.eigenvalues()[1]};
}

RobotModel test_chain() {
  return parse_robot(
      "[robot]\nname = chain\n"
      "[joint]\nname = r0\nkind = revolute\naxis = 0 0 1\norigin_xyz = 0 0 0\n"
      "origin_rpy = 0 0 0\nlimits = -1.5 1.5\nvelocity_limit = 4\neffort_limit = 40\n"
      "[joint]\nname = p1\nkind = prismatic\naxis = 0 0 -1\norigin_xyz = 0 0 -0.05\n"
      "origin_rpy = 0 0 0\nlimits = 0.1 0.5\nvelocity_limit = 0.6\neffort_limit = 100\n"
      "[tool_tip]\nxyz = 0 0 0\nrpy = 0 0 0\n",
      "inline");
}

}  // namespace

TEST_CASE("default gains give stable overdamped discrete poles") {
  // Pre-build oracle for the gain schedule: every DoF of every bundled robot
  // must have real poles strictly inside the unit circle at the default
  // control_dt / substeps.
  for (const auto& name : builtin_robot_names()) {
    RobotModel model = resolve_robot(name);
    DynamicsConfig cfg = default_dynamics_config(model);
    const double dt_sub = cfg.control_dt / cfg.substeps;
    for (int d = 0; d < model.dof_count; ++d) {
      auto [p0, p1] = closed_loop_poles(cfg.kp[d], cfg.kd[d], cfg.damping[d], cfg.inertia[d],
                                        dt_sub);
      CHECK(std::abs(p0) < 0.999);
      CHECK(std::abs(p1) < 0.999);
      CHECK(std::abs(p0.imag()) < 1e-9);
      CHECK(std::abs(p1.imag()) < 1e-9);
      CHECK(p0.real() > 0.0);
      CHECK(p1.real() > 0.0);
    }
  }
}

TEST_CASE("torque mode equilibrium is exactly preserved") {
  RobotModel model = test_chain();
  DynamicsConfig cfg = default_dynamics_config(model);
  cfg.control_mode = ControlMode::Torque;
  cfg.damping.setZero();
  SimBatch batch = SimBatch::create(model, 4, 1);
  MatrixXdR q0 = batch.q;
  MatrixXdR actions = MatrixXdR::Zero(4, model.dof_count);
  for (int i = 0; i < 10; ++i) step(batch, actions, cfg, model);
  CHECK(batch.q == q0);
  CHECK(batch.qdot.isZero(0.0));
}

TEST_CASE("position mode converges to a mid-range target") {
  for (const auto& name : builtin_robot_names()) {
    RobotModel model = resolve_robot(name);
    DynamicsConfig cfg = default_dynamics_config(model);
    SimBatch batch = SimBatch::create(model, 8, 3);
    std::vector<uint8_t> all(8, 1);
    reset_rows(batch, all, model);
    // Zero action maps to the exact range midpoint in position mode
    // (the jaw DoF snaps to closed, also a fixed target).
    MatrixXdR actions = MatrixXdR::Zero(8, model.dof_count);
    for (int s = 0; s < 500; ++s) step(batch, actions, cfg, model);
    double worst = (batch.q - batch.q_target).cwiseAbs().maxCoeff();
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("full positive action hits the upper limit exactly") {
  RobotModel model = test_chain();
  DynamicsConfig cfg = default_dynamics_config(model);
  SimBatch batch = SimBatch::create(model, 1, 0);
  MatrixXdR actions = MatrixXdR::Constant(1, model.dof_count, 1.0);
  step(batch, actions, cfg, model);
  CHECK(batch.q_target(0, 1) == model.dof_joint(1).limit_hi);  // prismatic DoF
  actions.setConstant(-1.0);
  step(batch, actions, cfg, model);
  CHECK(batch.q_target(0, 1) == model.dof_joint(1).limit_lo);
}

TEST_CASE("jaw targets snap to open or closed") {
  RobotModel psm = resolve_robot("psm");
  DynamicsConfig cfg = default_dynamics_config(psm);
  SimBatch batch = SimBatch::create(psm, 1, 0);
  const int jaw = psm.jaw_dof().value();
  MatrixXdR actions = MatrixXdR::Zero(1, psm.dof_count);
  actions(0, jaw) = 0.37;
  step(batch, actions, cfg, psm);
  CHECK(batch.q_target(0, jaw) == psm.dof_joint(jaw).limit_hi);
  actions(0, jaw) = -0.002;
  step(batch, actions, cfg, psm);
  CHECK(batch.q_target(0, jaw) == psm.dof_joint(jaw).limit_lo);
}

TEST_CASE("limits and velocity bounds hold under adversarial actions") {
  ThreadPool pool(2);
  RobotModel model = resolve_robot("psm");
  DynamicsConfig cfg = default_dynamics_config(model);
  SimBatch batch = SimBatch::create(model, 64, 99);
  std::vector<uint8_t> all(64, 1);
  reset_rows(batch, all, model);

  Pcg32 rng = make_stream(42, 0);
  MatrixXdR actions(64, model.dof_count);
  for (int mode = 0; mode < 3; ++mode) {
    cfg.control_mode = static_cast<ControlMode>(mode);
    for (int s = 0; s < 600; ++s) {
      for (int64_t i = 0; i < actions.size(); ++i) {
        // Extreme, boundary, and out-of-range values; step() clamps.
        const double r = rng.uniform(-2.0, 2.0);
        actions.data()[i] = r;
      }
      step(batch, actions, cfg, model, &pool);
      for (int64_t i = 0; i < batch.rows(); ++i) {
        for (int d = 0; d < model.dof_count; ++d) {
          const auto& j = model.dof_joint(d);
          REQUIRE(batch.q(i, d) >= j.limit_lo);
          REQUIRE(batch.q(i, d) <= j.limit_hi);
          REQUIRE(std::abs(batch.qdot(i, d)) <= j.velocity_limit);
        }
      }
    }
  }
}

TEST_CASE("saturation counter reports clamped entries") {
  RobotModel model = test_chain();
  DynamicsConfig cfg = default_dynamics_config(model);
  SimBatch batch = SimBatch::create(model, 3, 0);
  MatrixXdR actions(3, 2);
  actions << 0.5, 1.5, -2.0, 0.0, 1.0, -1.0;  // two out-of-range entries
  StepDiagnostics diag = step(batch, actions, cfg, model);
  CHECK(diag.saturated_actions == 2);
}

TEST_CASE("non-finite actions and bad shapes are hard errors") {
  RobotModel model = test_chain();
  DynamicsConfig cfg = default_dynamics_config(model);
  SimBatch batch = SimBatch::create(model, 2, 0);
  MatrixXdR nan_actions = MatrixXdR::Zero(2, 2);
  nan_actions(1, 1) = std::nan("");
  CHECK_THROWS_AS(step(batch, nan_actions, cfg, model), SimError);
  MatrixXdR bad_shape = MatrixXdR::Zero(2, 3);
  CHECK_THROWS_AS(step(batch, bad_shape, cfg, model), SimError);
}

TEST_CASE("energy dissipates in torque mode with zero input") {
  RobotModel model = test_chain();
  DynamicsConfig cfg = default_dynamics_config(model);
  cfg.control_mode = ControlMode::Torque;
  SimBatch batch = SimBatch::create(model, 16, 5);
  std::vector<uint8_t> all(16, 1);
  reset_rows(batch, all, model);
  Pcg32 rng = make_stream(6, 6);
  for (int64_t i = 0; i < batch.rows(); ++i) {
    for (int d = 0; d < model.dof_count; ++d) {
      const auto& j = model.dof_joint(d);
      batch.qdot(i, d) = rng.uniform(-j.velocity_limit, j.velocity_limit);
    }
  }
  MatrixXdR actions = MatrixXdR::Zero(16, model.dof_count);
  double prev = batch.qdot.squaredNorm();
  for (int s = 0; s < 200; ++s) {
    step(batch, actions, cfg, model);
    const double now = batch.qdot.squaredNorm();
    REQUIRE(now <= prev + 1e-15);
    prev = now;
  }
}

TEST_CASE("halving the substep roughly halves the one-step error") {
  RobotModel model = test_chain();
  Pcg32 rng = make_stream(13, 13);
  double ratio_sum = 0.0;
  const int trials = 60;
  for (int trial = 0; trial < trials; ++trial) {
    SimBatch base = SimBatch::create(model, 1, 7);
    for (int d = 0; d < model.dof_count; ++d) {
      const auto& j = model.dof_joint(d);
      const double mid = 0.5 * (j.limit_lo + j.limit_hi);
      const double span = 0.2 * (j.limit_hi - j.limit_lo);
      base.q(0, d) = rng.uniform(mid - span, mid + span);
      base.qdot(0, d) = rng.uniform(-0.2 * j.velocity_limit, 0.2 * j.velocity_limit);
    }
    MatrixXdR actions(1, model.dof_count);
    for (int d = 0; d < model.dof_count; ++d) actions(0, d) = rng.uniform(-0.2, 0.2);

    auto run = [&](int substeps) {
      SimBatch b = base;
      DynamicsConfig cfg = default_dynamics_config(model);
      cfg.substeps = substeps;
      step(b, actions, cfg, model);
      return Eigen::VectorXd(b.q.row(0));
    };
    Eigen::VectorXd coarse = run(4), fine = run(8), reference = run(512);
    const double e_coarse = (coarse - reference).norm();
    const double e_fine = (fine - reference).norm();
    REQUIRE(e_fine > 0.0);
    ratio_sum += e_coarse / e_fine;
  }
  const double mean_ratio = ratio_sum / trials;
  CHECK(mean_ratio > 1.5);
  CHECK(mean_ratio < 2.5);
}

TEST_CASE("reset_rows touches only masked rows and stays reproducible") {
  RobotModel model = resolve_robot("star");
  auto make = [&] {
    SimBatch b = SimBatch::create(model, 8, 4242);
    return b;
  };

  SimBatch a = make();
  MatrixXdR q_before = a.q;
  std::vector<uint8_t> none(8, 0);
  reset_rows(a, none, model);
  CHECK(a.q == q_before);

  std::vector<uint8_t> odd(8, 0);
  for (int i = 1; i < 8; i += 2) odd[i] = 1;
  reset_rows(a, odd, model);
  for (int i = 0; i < 8; i += 2) REQUIRE(a.q.row(i) == q_before.row(i));

  // Same seed, fresh batch: identical resets.
  SimBatch b = make();
  reset_rows(b, odd, model);
  CHECK(a.q == b.q);

  // Middle-50% bounds, always in limits, across many resets.
  std::vector<uint8_t> all(8, 1);
  for (int round = 0; round < 1250; ++round) {
    reset_rows(b, all, model);
    for (int i = 0; i < 8; ++i) {
      for (int d = 0; d < model.dof_count; ++d) {
        const auto& j = model.dof_joint(d);
        const double quarter = 0.25 * (j.limit_hi - j.limit_lo);
        REQUIRE(b.q(i, d) >= j.limit_lo + quarter);
        REQUIRE(b.q(i, d) <= j.limit_hi - quarter);
        REQUIRE(b.q_target(i, d) == b.q(i, d));
        REQUIRE(b.qdot(i, d) == 0.0);
      }
    }
  }
}

TEST_CASE("stepping is bitwise deterministic across worker counts") {
  RobotModel model = resolve_robot("psm");
  DynamicsConfig cfg = default_dynamics_config(model);
  auto run = [&](int workers) {
    ThreadPool pool(workers);
    SimBatch batch = SimBatch::create(model, 300, 11);
    std::vector<uint8_t> all(300, 1);
    reset_rows(batch, all, model);
    Pcg32 rng = make_stream(0, 0);
    MatrixXdR actions(300, model.dof_count);
    for (int s = 0; s < 50; ++s) {
      for (int64_t i = 0; i < actions.size(); ++i) actions.data()[i] = rng.uniform(-1, 1);
      step(batch, actions, cfg, model, &pool);
    }
    return MatrixXdR(batch.q);
  };
  MatrixXdR q1 = run(1), q2 = run(2), q5 = run(5);
  CHECK(q1 == q2);
  CHECK(q1 == q5);
}
