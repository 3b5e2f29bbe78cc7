// Copyright 2026 The tpik Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpik {

using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::MatrixXd;

// Standard Denavit-Hartenberg row: T = Rz(q + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DhRow {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct JointLimit {
  double min = -std::numbers::pi;
  double max = std::numbers::pi;
};

struct ArmModel {
  std::vector<DhRow> joints;
  std::vector<JointLimit> joint_limits;
  // Pose of the arm base expressed in the world frame.
  Eigen::Isometry3d base_frame = Eigen::Isometry3d::Identity();

  int dof() const { return static_cast<int>(joints.size()); }

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const {
    if (joints.empty()) throw std::invalid_argument("arm needs at least one joint");
    if (joint_limits.size() != joints.size())
      throw std::invalid_argument("one joint limit per joint required");
    for (std::size_t i = 0; i < joints.size(); ++i) {
      const DhRow& r = joints[i];
      if (!std::isfinite(r.a) || !std::isfinite(r.alpha) || !std::isfinite(r.d) ||
          !std::isfinite(r.theta_offset))
        throw std::invalid_argument("non-finite DH row " + std::to_string(i + 1));
      if (!(joint_limits[i].min < joint_limits[i].max))
        throw std::invalid_argument("joint " + std::to_string(i + 1) +
                                    ": limit min must be below max");
    }
  }
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Eigen::Isometry3d isometry() const {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = orientation.toRotationMatrix();
    t.translation() = position;
    return t;
  }

  static Pose from(const Eigen::Isometry3d& t) {
    Pose p;
    p.position = t.translation();
    p.orientation = Eigen::Quaterniond(t.rotation()).normalized();
    return p;
  }
};

// 7-DOF anthropomorphic chain with a spherical shoulder, elbow and wrist,
// roughly 0.9 m of reach beyond the shoulder. All link offsets a_i are zero,
// so frame origins 3/4 coincide at the elbow and 5/6 at the wrist centre.
inline ArmModel default_arm() {
  constexpr double h = std::numbers::pi / 2;
  ArmModel m;
  m.joints = {
      {0.0, -h, 0.2755, 0.0}, {0.0, h, 0.0, 0.0},  {0.0, h, 0.41, 0.0},
      {0.0, -h, 0.0, 0.0},    {0.0, -h, 0.31, 0.0}, {0.0, h, 0.0, 0.0},
      {0.0, 0.0, 0.18, 0.0},
  };
  m.joint_limits = {
      {-2.9, 2.9}, {-2.0, 2.0}, {-2.9, 2.9}, {-2.2, 2.2},
      {-2.9, 2.9}, {-2.0, 2.0}, {-2.9, 2.9},
  };
  return m;
}

inline JointVector default_home() {
  JointVector q(7);
  q << 0.0, 0.6, 0.0, -1.4, 0.0, 0.9, 0.0;
  return q;
}

// Local transform from frame i-1 to frame i (i is 1-based).
inline Eigen::Isometry3d dh_transform(const DhRow& row, double q) {
  const double th = q + row.theta_offset;
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  Eigen::Isometry3d t;
  t.matrix() = m;
  return t;
}

namespace detail {

inline void check_q(const ArmModel& model, const JointVector& q) {
  if (q.size() != model.dof())
    throw std::invalid_argument("joint vector length " + std::to_string(q.size()) +
                                " does not match " + std::to_string(model.dof()) +
                                " joints");
  if (!q.allFinite()) throw std::invalid_argument("joint vector is not finite");
}

}  // namespace detail

// Frames 0..n in the base frame; frames[0] is the identity.
inline std::vector<Eigen::Isometry3d> link_frames(const ArmModel& model,
                                                  const JointVector& q) {
  detail::check_q(model, q);
  std::vector<Eigen::Isometry3d> frames;
  frames.reserve(model.joints.size() + 1);
  frames.push_back(Eigen::Isometry3d::Identity());
  for (int i = 0; i < model.dof(); ++i)
    frames.push_back(frames.back() * dh_transform(model.joints[i], q[i]));
  return frames;
}

inline Pose forward_kinematics(const ArmModel& model, const JointVector& q,
                               int link_index) {
  if (link_index < 1 || link_index > model.dof())
    throw std::out_of_range("link index " + std::to_string(link_index) +
                            " outside 1.." + std::to_string(model.dof()));
  return Pose::from(link_frames(model, q)[link_index]);
}

// Rows 0-2 linear velocity of the end-effector origin, rows 3-5 angular
// velocity, both in the base frame.
inline Jacobian geometric_jacobian(const ArmModel& model, const JointVector& q) {
  const auto frames = link_frames(model, q);
  const int n = model.dof();
  const Eigen::Vector3d p = frames[n].translation();
  Jacobian j(6, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d z = frames[i].linear().col(2);
    j.block<3, 1>(0, i) = z.cross(p - frames[i].translation());
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

// Positional Jacobian of a point rigidly attached to frame `link` (origin plus
// `offset` in frame coordinates), keeping only the first link-1 columns.
// Columns link..n are exactly zero.
inline Jacobian positional_jacobian_truncated(
    const ArmModel& model, const JointVector& q, int link,
    const Eigen::Vector3d& offset = Eigen::Vector3d::Zero()) {
  if (link < 1 || link > model.dof())
    throw std::out_of_range("control link " + std::to_string(link) +
                            " outside 1.." + std::to_string(model.dof()));
  const auto frames = link_frames(model, q);
  const Eigen::Vector3d p = frames[link] * offset;
  Jacobian j = Jacobian::Zero(3, model.dof());
  for (int i = 0; i + 1 < link; ++i)
    j.col(i) = frames[i].linear().col(2).cross(p - frames[i].translation());
  return j;
}

inline Eigen::Vector3d control_point(const ArmModel& model, const JointVector& q,
                                     int link,
                                     const Eigen::Vector3d& offset = Eigen::Vector3d::Zero()) {
  return forward_kinematics(model, q, link).isometry() * offset;
}

}  // namespace tpik
