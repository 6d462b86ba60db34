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

#include "doctest.h"
#include "scalpel/errors.hpp"
#include "scalpel/robot_model.hpp"
#include "scalpel/rng.hpp"
#include "scalpel/thread_pool.hpp"

using namespace scalpel;

namespace {

// Independent FK oracle: plain 4x4 homogeneous-matrix products with
// Rodrigues rotations. Shares no composition code with forward_kinematics.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double angle) {
  Eigen::Matrix3d k;
  k << 0.0, -axis.z(), axis.y(), axis.z(), 0.0, -axis.x(), -axis.y(), axis.x(), 0.0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

Eigen::Matrix4d hom(const Eigen::Matrix3d& rot, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = rot;
  m.block<3, 1>(0, 3) = t;
  return m;
}

Eigen::Matrix4d fk_oracle(const RobotModel& model, const Eigen::VectorXd& q) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  int d = 0;
  for (const auto& j : model.joints) {
    m = m * hom(j.origin_rotation.toRotationMatrix(), j.origin_translation);
    if (j.kind == JointKind::Revolute) {
      m = m * hom(rodrigues(j.axis, q[d++]), Eigen::Vector3d::Zero());
    } else if (j.kind == JointKind::Prismatic) {
      m = m * hom(Eigen::Matrix3d::Identity(), j.axis * q[d++]);
    }
  }
  m = m * hom(model.tool_tip_offset.orientation.toRotationMatrix(),
              model.tool_tip_offset.position);
  return m;
}

Eigen::VectorXd random_in_limit_q(const RobotModel& model, Pcg32& rng, double margin = 0.0) {
  Eigen::VectorXd q(model.dof_count);
  for (int d = 0; d < model.dof_count; ++d) {
    const auto& j = model.dof_joint(d);
    q[d] = rng.uniform(j.limit_lo + margin, j.limit_hi - margin);
  }
  return q;
}

RobotModel single_revolute_chain(double link_len) {
  RobotModel m = parse_robot(
      "[robot]\nname = onelink\n"
      "[joint]\nname = j0\nkind = revolute\naxis = 0 0 1\norigin_xyz = 0 0 0\n"
      "origin_rpy = 0 0 0\nlimits = -3.14 3.14\nvelocity_limit = 1\neffort_limit = 1\n"
      "[tool_tip]\nxyz = " +
          std::to_string(link_len) + " 0 0\nrpy = 0 0 0\n",
      "inline");
  return m;
}

}  // namespace

TEST_CASE("bundled robots have the published joint sequences") {
  RobotModel psm = resolve_robot("psm");
  CHECK(psm.dof_count == 7);
  REQUIRE(psm.jaw_joint.has_value());
  CHECK(*psm.jaw_joint == 6);
  std::string seq;
  for (int d = 0; d < 6; ++d) {
    seq += psm.dof_joint(d).kind == JointKind::Prismatic ? 'P' : 'R';
  }
  CHECK(seq == "RRPRRR");
  CHECK(psm.dof_joint(6).kind == JointKind::Revolute);  // the jaw

  RobotModel ecm = resolve_robot("ecm");
  CHECK(ecm.dof_count == 6);
  CHECK_FALSE(ecm.jaw_joint.has_value());
  seq.clear();
  for (int d = 0; d < 6; ++d) {
    seq += ecm.dof_joint(d).kind == JointKind::Prismatic ? 'P' : 'R';
  }
  CHECK(seq == "RRPRRR");

  RobotModel star = resolve_robot("star");
  CHECK(star.dof_count == 8);
  for (int d = 0; d < 8; ++d) CHECK(star.dof_joint(d).kind == JointKind::Revolute);
}

TEST_CASE("descriptor files on disk match the builtins") {
  for (const auto& name : builtin_robot_names()) {
    RobotModel from_file = load_robot(std::string(SCALPEL_SOURCE_ASSETS) + "/robots/" + name + ".robot");
    RobotModel builtin = resolve_robot(name);
    CHECK(from_file.name == builtin.name);
    REQUIRE(from_file.joints.size() == builtin.joints.size());
    for (size_t i = 0; i < builtin.joints.size(); ++i) {
      CHECK(from_file.joints[i].limit_lo == builtin.joints[i].limit_lo);
      CHECK(from_file.joints[i].limit_hi == builtin.joints[i].limit_hi);
    }
  }
}

TEST_CASE("zero configuration composes origins alone") {
  RobotModel star = resolve_robot("star");
  Pose tip = forward_kinematics(star, Eigen::VectorXd::Zero(8));
  Eigen::Vector3d expected = Eigen::Vector3d::Zero();
  for (const auto& j : star.joints) expected += j.origin_translation;
  expected += star.tool_tip_offset.position;
  CHECK((tip.position - expected).norm() < 1e-12);
  CHECK(std::abs(tip.orientation.norm() - 1.0) < 1e-9);
}

TEST_CASE("planar quarter-turn moves the link from x to y") {
  RobotModel chain = single_revolute_chain(0.37);
  Eigen::VectorXd q(1);
  q << M_PI / 2.0;
  Pose tip = forward_kinematics(chain, q);
  CHECK(tip.position.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tip.position.y() == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(tip.position.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("forward kinematics matches the homogeneous-matrix oracle") {
  Pcg32 rng = make_stream(2024, 11);
  for (const auto& name : builtin_robot_names()) {
    RobotModel model = resolve_robot(name);
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXd q = random_in_limit_q(model, rng);
      Pose tip = forward_kinematics(model, q);
      Eigen::Matrix4d m = fk_oracle(model, q);
      REQUIRE((tip.position - m.block<3, 1>(0, 3)).norm() < 1e-9);
      REQUIRE((tip.orientation.toRotationMatrix() - m.block<3, 3>(0, 0)).norm() < 1e-9);
    }
  }
}

TEST_CASE("batch FK is bitwise equal to scalar calls") {
  ThreadPool pool(3);
  Pcg32 rng = make_stream(5, 0);
  RobotModel model = resolve_robot("psm");

  MatrixXdR batch(257, model.dof_count);
  for (int i = 0; i < batch.rows(); ++i) batch.row(i) = random_in_limit_q(model, rng).transpose();

  auto poses = forward_kinematics_batch(model, batch, &pool);
  for (int i = 0; i < batch.rows(); ++i) {
    Pose scalar = forward_kinematics(model, Eigen::VectorXd(batch.row(i)));
    REQUIRE(poses[i].position == scalar.position);
    REQUIRE(poses[i].orientation.coeffs() == scalar.orientation.coeffs());
  }

  SUBCASE("batch of one") {
    MatrixXdR one = batch.topRows(1);
    auto single = forward_kinematics_batch(model, one);
    CHECK(single[0].position == poses[0].position);
  }

  SUBCASE("duplicated rows are bitwise identical") {
    MatrixXdR dup(1024, model.dof_count);
    for (int i = 0; i < 1024; ++i) dup.row(i) = batch.row(3);
    auto out = forward_kinematics_batch(model, dup, &pool);
    for (int i = 1; i < 1024; ++i) {
      REQUIRE(out[i].position == out[0].position);
      REQUIRE(out[i].orientation.coeffs() == out[0].orientation.coeffs());
    }
  }

  SUBCASE("worker count does not change results") {
    ThreadPool pool1(1), pool7(7);
    auto a = forward_kinematics_batch(model, batch, &pool1);
    auto b = forward_kinematics_batch(model, batch, &pool7);
    for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].position == b[i].position);
  }
}

TEST_CASE("tip jacobian: prismatic column is the world axis") {
  RobotModel m = parse_robot(
      "[robot]\nname = slider\n"
      "[joint]\nname = j0\nkind = prismatic\naxis = 0 0 -1\norigin_xyz = 0 0 0\n"
      "origin_rpy = 0 0 0\nlimits = 0 1\nvelocity_limit = 1\neffort_limit = 1\n"
      "[tool_tip]\nxyz = 0 0 0\nrpy = 0 0 0\n",
      "inline");
  Eigen::VectorXd q(1);
  q << 0.3;
  auto jac = tip_jacobian(m, q);
  CHECK(jac.col(0).isApprox(Eigen::Vector3d(0, 0, -1), 1e-15));
}

TEST_CASE("tip jacobian matches central finite differences") {
  const double h = 1e-6;
  Pcg32 rng = make_stream(77, 3);
  for (const auto& name : builtin_robot_names()) {
    RobotModel model = resolve_robot(name);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd q = random_in_limit_q(model, rng, 2.0 * h);
      auto jac = tip_jacobian(model, q);
      for (int d = 0; d < model.dof_count; ++d) {
        Eigen::VectorXd qp = q, qm = q;
        qp[d] += h;
        qm[d] -= h;
        Eigen::Vector3d fd =
            (forward_kinematics(model, qp).position - forward_kinematics(model, qm).position) /
            (2.0 * h);
        REQUIRE((jac.col(d) - fd).lpNorm<Eigen::Infinity>() < 1e-5);
      }
    }
  }
}

TEST_CASE("stretched planar 2R chain has a rank-1 jacobian") {
  RobotModel m = parse_robot(
      "[robot]\nname = planar2r\n"
      "[joint]\nname = j0\nkind = revolute\naxis = 0 0 1\norigin_xyz = 0 0 0\n"
      "origin_rpy = 0 0 0\nlimits = -3 3\nvelocity_limit = 1\neffort_limit = 1\n"
      "[joint]\nname = j1\nkind = revolute\naxis = 0 0 1\norigin_xyz = 0.2 0 0\n"
      "origin_rpy = 0 0 0\nlimits = -3 3\nvelocity_limit = 1\neffort_limit = 1\n"
      "[tool_tip]\nxyz = 0.2 0 0\nrpy = 0 0 0\n",
      "inline");
  auto jac = tip_jacobian(m, Eigen::VectorXd::Zero(2));  // fully stretched along x
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  CHECK(svd.singularValues()[0] > 1e-3);
  CHECK(svd.singularValues()[1] < 1e-12);
}

TEST_CASE("FK position is continuous under small perturbations") {
  Pcg32 rng = make_stream(31, 4);
  RobotModel model = resolve_robot("star");
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd q = random_in_limit_q(model, rng, 1e-5);
    auto jac = tip_jacobian(model, q);
    const double j_bound = jac.norm();
    Eigen::VectorXd dq(model.dof_count);
    for (int d = 0; d < model.dof_count; ++d) dq[d] = rng.uniform(-1.0, 1.0);
    dq *= 1e-6 / dq.norm();
    Eigen::Vector3d p0 = forward_kinematics(model, q).position;
    Eigen::Vector3d p1 = forward_kinematics(model, q + dq).position;
    REQUIRE((p1 - p0).norm() <= 1.01 * j_bound * dq.norm() + 1e-15);
  }
}

TEST_CASE("serialize-parse round trip preserves the model") {
  for (const auto& name : builtin_robot_names()) {
    RobotModel a = resolve_robot(name);
    RobotModel b = parse_robot(serialize_robot(a), "roundtrip");
    REQUIRE(a.joints.size() == b.joints.size());
    CHECK(a.name == b.name);
    CHECK(a.dof_count == b.dof_count);
    CHECK(a.jaw_joint == b.jaw_joint);
    for (size_t i = 0; i < a.joints.size(); ++i) {
      const auto &ja = a.joints[i], &jb = b.joints[i];
      CHECK(ja.name == jb.name);
      CHECK(ja.kind == jb.kind);
      CHECK(ja.axis == jb.axis);
      CHECK(ja.origin_translation == jb.origin_translation);
      CHECK((ja.origin_rotation.toRotationMatrix() - jb.origin_rotation.toRotationMatrix())
                .norm() < 1e-12);
      CHECK(ja.limit_lo == jb.limit_lo);
      CHECK(ja.limit_hi == jb.limit_hi);
      CHECK(ja.velocity_limit == jb.velocity_limit);
      CHECK(ja.effort_limit == jb.effort_limit);
    }
    // Same kinematics, bit for bit.
    Pcg32 rng = make_stream(1, 1);
    Eigen::VectorXd q = random_in_limit_q(a, rng);
    CHECK(forward_kinematics(a, q).position == forward_kinematics(b, q).position);
  }
}

TEST_CASE("descriptor errors carry locations and joint names") {
  CHECK_THROWS_WITH_AS(
      parse_robot("[robot]\nname = x\n[joint]\nname = bad\nkind = revolute\naxis = 0 0 1\n"
                  "origin_xyz = 0 0 0\norigin_rpy = 0 0 0\nlimits = 2 1\n"
                  "velocity_limit = 1\neffort_limit = 1\n[tool_tip]\nxyz = 0 0 0\nrpy = 0 0 0\n",
                  "mem"),
      doctest::Contains("bad"), ConfigError);

  CHECK_THROWS_WITH_AS(
      parse_robot("[robot]\nname = x\n[joint]\nname = j\nkind = revolute\naxis = 0 0 2\n"
                  "origin_xyz = 0 0 0\norigin_rpy = 0 0 0\nlimits = -1 1\n"
                  "velocity_limit = 1\neffort_limit = 1\n[tool_tip]\nxyz = 0 0 0\nrpy = 0 0 0\n",
                  "mem"),
      doctest::Contains("unit"), ConfigError);

  try {
    parse_robot("[robot]\nname = x\nbogus_key = 1\n", "somefile");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("somefile:3") != std::string::npos);
  }

  CHECK_THROWS_WITH_AS(load_robot("/no/such/robot.robot"), doctest::Contains("/no/such/robot"),
                       ConfigError);
  CHECK_THROWS_AS(resolve_robot("not_a_robot"), ConfigError);
}

TEST_CASE("out-of-limit and wrong-size FK inputs are rejected") {
  RobotModel model = resolve_robot("psm");
  CHECK_THROWS_AS(forward_kinematics(model, Eigen::VectorXd::Zero(3)), SimError);
  Eigen::VectorXd q = model.mid_configuration();
  q[0] = model.dof_joint(0).limit_hi + 0.1;
  CHECK_THROWS_WITH_AS(forward_kinematics(model, q), doctest::Contains("outer_yaw"), SimError);
}

TEST_CASE("mid configuration sits at every range center") {
  RobotModel m = resolve_robot("star");
  Eigen::VectorXd mid = m.mid_configuration();
  for (int d = 0; d < m.dof_count; ++d) {
    const auto& j = m.dof_joint(d);
    CHECK(mid[d] == doctest::Approx(0.5 * (j.limit_lo + j.limit_hi)));
  }
  CHECK(resolve_robot("psm").jaw_dof().value() == 6);
}
