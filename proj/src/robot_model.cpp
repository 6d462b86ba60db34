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

#include "scalpel/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "scalpel/errors.hpp"
#include "scalpel/thread_pool.hpp"

namespace scalpel {

namespace {

struct BuiltinRobot {
  const char* name;
  const char* text;
};

#include "robot_assets.inc"

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_numbers(const std::string& value, size_t expect, const std::string& origin,
                                  int line, const std::string& key) {
  std::istringstream in(value);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  std::string rest;
  if (!in.eof() || (in >> rest && !rest.empty()) || out.size() != expect) {
    throw ParseError(origin, line,
                     "field '" + key + "' expects " + std::to_string(expect) +
                         " number(s), got '" + value + "'");
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Accumulates one [joint] section; flushed when the section ends.
struct PendingJoint {
  int line = 0;
  std::map<std::string, std::pair<std::string, int>> fields;  // key -> (value, line)
  bool active = false;
};

JointKind parse_kind(const std::string& v, const std::string& origin, int line) {
  if (v == "revolute") return JointKind::Revolute;
  if (v == "prismatic") return JointKind::Prismatic;
  if (v == "fixed") return JointKind::Fixed;
  throw ParseError(origin, line, "unknown joint kind '" + v + "'");
}

JointSpec flush_joint(PendingJoint& pj, size_t index, const std::string& origin) {
  auto take = [&](const std::string& key, bool required) -> std::pair<std::string, int> {
    auto it = pj.fields.find(key);
    if (it == pj.fields.end()) {
      if (required) {
        throw ParseError(origin, pj.line,
                         "joint #" + std::to_string(index) + " is missing required field '" + key + "'");
      }
      return {"", -1};
    }
    auto out = it->second;
    pj.fields.erase(it);
    return out;
  };

  JointSpec j;
  auto [name_v, name_l] = take("name", true);
  j.name = name_v;
  auto [kind_v, kind_l] = take("kind", true);
  j.kind = parse_kind(kind_v, origin, kind_l);

  auto [axis_v, axis_l] = take("axis", j.kind != JointKind::Fixed);
  if (axis_l >= 0) {
    auto a = parse_numbers(axis_v, 3, origin, axis_l, "axis");
    j.axis = Eigen::Vector3d(a[0], a[1], a[2]);
  }
  auto [xyz_v, xyz_l] = take("origin_xyz", true);
  auto t = parse_numbers(xyz_v, 3, origin, xyz_l, "origin_xyz");
  j.origin_translation = Eigen::Vector3d(t[0], t[1], t[2]);
  auto [rpy_v, rpy_l] = take("origin_rpy", true);
  auto r = parse_numbers(rpy_v, 3, origin, rpy_l, "origin_rpy");
  j.origin_rotation = quat_from_rpy(r[0], r[1], r[2]);

  if (j.kind != JointKind::Fixed) {
    auto [lim_v, lim_l] = take("limits", true);
    auto lim = parse_numbers(lim_v, 2, origin, lim_l, "limits");
    j.limit_lo = lim[0];
    j.limit_hi = lim[1];
    auto [vel_v, vel_l] = take("velocity_limit", true);
    j.velocity_limit = parse_numbers(vel_v, 1, origin, vel_l, "velocity_limit")[0];
    auto [eff_v, eff_l] = take("effort_limit", true);
    j.effort_limit = parse_numbers(eff_v, 1, origin, eff_l, "effort_limit")[0];
  }

  if (!pj.fields.empty()) {
    const auto& [key, val] = *pj.fields.begin();
    throw ParseError(origin, val.second, "unknown joint field '" + key + "'");
  }
  pj = PendingJoint{};
  return j;
}

void validate_model(const RobotModel& model, const std::string& origin) {
  if (model.name.empty()) throw ConfigError(origin + ": missing robot name");
  if (model.joints.empty()) throw ConfigError(origin + ": robot has no joints");
  for (const auto& j : model.joints) {
    if (j.kind != JointKind::Fixed) {
      if (std::abs(j.axis.norm() - 1.0) > 1e-12) {
        throw ConfigError(origin + ": joint '" + j.name + "': axis is not unit-norm");
      }
      if (!(j.limit_lo < j.limit_hi)) {
        throw ConfigError(origin + ": joint '" + j.name + "': limit_lo must be < limit_hi");
      }
      if (!(j.velocity_limit > 0.0)) {
        throw ConfigError(origin + ": joint '" + j.name + "': velocity_limit must be > 0");
      }
      if (!(j.effort_limit > 0.0)) {
        throw ConfigError(origin + ": joint '" + j.name + "': effort_limit must be > 0");
      }
    }
  }
  if (model.jaw_joint) {
    int idx = *model.jaw_joint;
    if (idx < 0 || idx >= static_cast<int>(model.joints.size())) {
      throw ConfigError(origin + ": jaw joint index out of range");
    }
    if (model.joints[idx].kind != JointKind::Revolute) {
      throw ConfigError(origin + ": jaw joint '" + model.joints[idx].name + "' must be revolute");
    }
  }
}

}  // namespace

std::string to_string(JointKind kind) {
  switch (kind) {
    case JointKind::Revolute: return "revolute";
    case JointKind::Prismatic: return "prismatic";
    case JointKind::Fixed: return "fixed";
  }
  return "?";
}

std::optional<int> RobotModel::jaw_dof() const {
  if (!jaw_joint) return std::nullopt;
  for (int d = 0; d < dof_count; ++d) {
    if (dof_to_joint[d] == *jaw_joint) return d;
  }
  return std::nullopt;
}

Eigen::VectorXd RobotModel::mid_configuration() const {
  Eigen::VectorXd q(dof_count);
  for (int d = 0; d < dof_count; ++d) {
    const auto& j = dof_joint(d);
    q[d] = 0.5 * (j.limit_lo + j.limit_hi);
  }
  return q;
}

RobotModel parse_robot(std::string_view text, const std::string& origin) {
  RobotModel model;
  PendingJoint pending;
  std::string section;
  bool have_tool_tip = false;
  int line_no = 0;

  auto end_section = [&]() {
    if (section == "joint" && pending.active) {
      model.joints.push_back(flush_joint(pending, model.joints.size(), origin));
    }
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(origin, line_no, "malformed section header");
      end_section();
      section = line.substr(1, line.size() - 2);
      if (section != "robot" && section != "joint" && section != "tool_tip" && section != "jaw") {
        throw ParseError(origin, line_no, "unknown section [" + section + "]");
      }
      if (section == "joint") {
        pending = PendingJoint{};
        pending.active = true;
        pending.line = line_no;
      }
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin, line_no, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(origin, line_no, "expected 'key = value'");

    if (section == "robot") {
      if (key == "name") {
        model.name = value;
      } else if (key == "format_version") {
        model.format_version = static_cast<int>(parse_numbers(value, 1, origin, line_no, key)[0]);
        if (model.format_version != 1) {
          throw ParseError(origin, line_no,
                           "unsupported format_version " + std::to_string(model.format_version));
        }
      } else {
        throw ParseError(origin, line_no, "unknown [robot] field '" + key + "'");
      }
    } else if (section == "joint") {
      if (pending.fields.count(key)) throw ParseError(origin, line_no, "duplicate field '" + key + "'");
      pending.fields[key] = {value, line_no};
    } else if (section == "tool_tip") {
      have_tool_tip = true;
      if (key == "xyz") {
        auto t = parse_numbers(value, 3, origin, line_no, key);
        model.tool_tip_offset.position = Eigen::Vector3d(t[0], t[1], t[2]);
      } else if (key == "rpy") {
        auto r = parse_numbers(value, 3, origin, line_no, key);
        model.tool_tip_offset.orientation = quat_from_rpy(r[0], r[1], r[2]);
      } else {
        throw ParseError(origin, line_no, "unknown [tool_tip] field '" + key + "'");
      }
    } else if (section == "jaw") {
      if (key == "joint") {
        model.jaw_joint = static_cast<int>(parse_numbers(value, 1, origin, line_no, key)[0]);
      } else {
        throw ParseError(origin, line_no, "unknown [jaw] field '" + key + "'");
      }
    } else {
      throw ParseError(origin, line_no, "content before any section header");
    }
  }
  end_section();

  if (!have_tool_tip) throw ConfigError(origin + ": missing [tool_tip] section");

  model.dof_count = 0;
  model.dof_to_joint.clear();
  for (size_t i = 0; i < model.joints.size(); ++i) {
    if (model.joints[i].kind != JointKind::Fixed) {
      model.dof_to_joint.push_back(static_cast<int>(i));
      ++model.dof_count;
    }
  }

  validate_model(model, origin);
  return model;
}

RobotModel load_robot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open robot description '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_robot(buf.str(), path);
}

std::string serialize_robot(const RobotModel& model) {
  std::ostringstream out;
  out << "[robot]\n";
  out << "name = " << model.name << "\n";
  out << "format_version = " << model.format_version << "\n";
  for (const auto& j : model.joints) {
    out << "\n[joint]\n";
    out << "name = " << j.name << "\n";
    out << "kind = " << to_string(j.kind) << "\n";
    if (j.kind != JointKind::Fixed) {
      out << "axis = " << fmt_double(j.axis[0]) << " " << fmt_double(j.axis[1]) << " "
          << fmt_double(j.axis[2]) << "\n";
    }
    out << "origin_xyz = " << fmt_double(j.origin_translation[0]) << " "
        << fmt_double(j.origin_translation[1]) << " " << fmt_double(j.origin_translation[2]) << "\n";
    Eigen::Vector3d rpy = rpy_from_quat(j.origin_rotation);
    out << "origin_rpy = " << fmt_double(rpy[0]) << " " << fmt_double(rpy[1]) << " "
        << fmt_double(rpy[2]) << "\n";
    if (j.kind != JointKind::Fixed) {
      out << "limits = " << fmt_double(j.limit_lo) << " " << fmt_double(j.limit_hi) << "\n";
      out << "velocity_limit = " << fmt_double(j.velocity_limit) << "\n";
      out << "effort_limit = " << fmt_double(j.effort_limit) << "\n";
    }
  }
  out << "\n[tool_tip]\n";
  out << "xyz = " << fmt_double(model.tool_tip_offset.position[0]) << " "
      << fmt_double(model.tool_tip_offset.position[1]) << " "
      << fmt_double(model.tool_tip_offset.position[2]) << "\n";
  Eigen::Vector3d rpy = rpy_from_quat(model.tool_tip_offset.orientation);
  out << "rpy = " << fmt_double(rpy[0]) << " " << fmt_double(rpy[1]) << " " << fmt_double(rpy[2])
      << "\n";
  if (model.jaw_joint) {
    out << "\n[jaw]\n";
    out << "joint = " << *model.jaw_joint << "\n";
  }
  return out.str();
}

std::vector<std::string> builtin_robot_names() {
  std::vector<std::string> names;
  for (const auto& r : kBuiltinRobots) names.push_back(r.name);
  return names;
}

RobotModel resolve_robot(const std::string& name_or_path) {
  for (const auto& r : kBuiltinRobots) {
    if (name_or_path == r.name) return parse_robot(r.text, std::string("builtin:") + r.name);
  }
  if (name_or_path.find('/') != std::string::npos ||
      name_or_path.find(".robot") != std::string::npos) {
    return load_robot(name_or_path);
  }
  std::string known;
  for (const auto& r : kBuiltinRobots) known += std::string(" ") + r.name;
  throw ConfigError("unknown robot '" + name_or_path + "' (builtins:" + known +
                    "; or pass a .robot descriptor path)");
}

namespace {

inline void check_q(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof_count) {
    throw SimError("forward_kinematics: expected " + std::to_string(model.dof_count) +
                   " DoF values, got " + std::to_string(q.size()));
  }
  constexpr double kEps = 1e-9;
  for (int d = 0; d < model.dof_count; ++d) {
    const auto& j = model.dof_joint(d);
    if (q[d] < j.limit_lo - kEps || q[d] > j.limit_hi + kEps) {
      throw SimError("forward_kinematics: joint '" + j.name + "' value " + std::to_string(q[d]) +
                     " outside [" + std::to_string(j.limit_lo) + ", " + std::to_string(j.limit_hi) +
                     "]");
    }
  }
}

// Shared FK walk; optionally records per-DoF world axes and origins for the
// geometric Jacobian.
inline Pose fk_walk(const RobotModel& model, const Eigen::VectorXd& q,
                    Eigen::Vector3d* dof_origins, Eigen::Vector3d* dof_axes) {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rot = Eigen::Quaterniond::Identity();
  int d = 0;
  for (const auto& j : model.joints) {
    p += rot * j.origin_translation;
    rot = rot * j.origin_rotation;
    if (j.kind == JointKind::Fixed) continue;
    if (dof_origins != nullptr) {
      dof_origins[d] = p;
      dof_axes[d] = rot * j.axis;
    }
    if (j.kind == JointKind::Revolute) {
      rot = rot * Eigen::Quaterniond(Eigen::AngleAxisd(q[d], j.axis));
    } else {
      p += rot * (j.axis * q[d]);
    }
    ++d;
  }
  Pose tip;
  tip.position = p + rot * model.tool_tip_offset.position;
  tip.orientation = rot * model.tool_tip_offset.orientation;
  return tip;
}

}  // namespace

Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
  check_q(model, q);
  return fk_walk(model, q, nullptr, nullptr);
}

void forward_kinematics_batch(const RobotModel& model, const MatrixXdR& q_batch,
                              std::span<Pose> out, ThreadPool* pool) {
  const int64_t n = q_batch.rows();
  if (q_batch.cols() != model.dof_count) {
    throw SimError("forward_kinematics_batch: expected " + std::to_string(model.dof_count) +
                   " columns, got " + std::to_string(q_batch.cols()));
  }
  if (static_cast<int64_t>(out.size()) != n) {
    throw SimError("forward_kinematics_batch: output size mismatch");
  }

  std::mutex err_mu;
  std::string err;
  auto body = [&](int64_t begin, int64_t end) {
    try {
      Eigen::VectorXd q(model.dof_count);
      for (int64_t i = begin; i < end; ++i) {
        q = q_batch.row(i);
        check_q(model, q);
        out[i] = fk_walk(model, q, nullptr, nullptr);
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (err.empty()) err = e.what();
    }
  };
  if (pool != nullptr) {
    pool->parallel_for(n, 256, body);
  } else {
    body(0, n);
  }
  if (!err.empty()) throw SimError(err);
}

std::vector<Pose> forward_kinematics_batch(const RobotModel& model, const MatrixXdR& q_batch,
                                           ThreadPool* pool) {
  std::vector<Pose> out(q_batch.rows());
  forward_kinematics_batch(model, q_batch, out, pool);
  return out;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> tip_jacobian(const RobotModel& model,
                                                      const Eigen::VectorXd& q) {
  check_q(model, q);
  std::vector<Eigen::Vector3d> origins(model.dof_count), axes(model.dof_count);
  Pose tip = fk_walk(model, q, origins.data(), axes.data());

  Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, model.dof_count);
  for (int d = 0; d < model.dof_count; ++d) {
    if (model.dof_joint(d).kind == JointKind::Revolute) {
      jac.col(d) = axes[d].cross(tip.position - origins[d]);
    } else {
      jac.col(d) = axes[d];
    }
  }
  return jac;
}

}  // namespace scalpel
