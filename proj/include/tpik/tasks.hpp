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
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tpik/errors.hpp"
#include "tpik/kinematics.hpp"

namespace tpik {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Nested bounds of a scalar set-based task:
//   m < sl < al = sl + eps <= au = su - eps < su < M
// An unused side is expressed with sl = m = -inf (or su = M = +inf).
struct SetBasedThresholds {
  double m = -kInf;
  double sl = -kInf;
  double su = kInf;
  double M = kInf;
  double epsilon = 0.05;

  bool has_lower() const { return std::isfinite(sl); }
  bool has_upper() const { return std::isfinite(su); }
  double al() const { return sl + epsilon; }
  double au() const { return su - epsilon; }

  // Empty string when valid, otherwise the violated link of the chain.
  std::string violation() const {
    if (!(epsilon > 0.0)) return "epsilon must be positive";
    if (!has_lower() && !has_upper()) return "at least one safety threshold required";
    if (has_lower() && !(m < sl)) return "physical lower bound m must be below sl";
    if (has_upper() && !(su < M)) return "su must be below physical upper bound M";
    if (has_lower() && has_upper() && !(al() <= au()))
      return "threshold chain requires sl + epsilon <= su - epsilon";
    if (std::isnan(m) || std::isnan(M)) return "thresholds must not be NaN";
    return {};
  }

  void validate() const {
    if (auto v = violation(); !v.empty()) throw std::invalid_argument(v);
  }

  static SetBasedThresholds lower(double m, double sl, double epsilon = 0.05) {
    return {m, sl, kInf, kInf, epsilon};
  }
  static SetBasedThresholds upper(double su, double M, double epsilon = 0.05) {
    return {-kInf, -kInf, su, M, epsilon};
  }
  static SetBasedThresholds both(double m, double sl, double su, double M,
                                 double epsilon = 0.05) {
    return {m, sl, su, M, epsilon};
  }
};

enum class TaskMode { equality, set_based };
enum class PriorityGroup { safety = 0, operational = 1, optimization = 2 };
enum class Axis { x = 0, y = 1, z = 2 };
enum class WallSide { min, max };

struct EePositionTask {};
struct EeConfigurationTask {
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};
struct JointLimitTask {
  int joint = 1;  // 1-based
};
struct ObstacleTask {
  int link = 7;  // frame whose origin (plus offset) is the control point
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
};
struct VirtualWallTask {
  Axis axis = Axis::z;
  WallSide side = WallSide::min;
  double offset = 0.0;
};

using TaskKind = std::variant<EePositionTask, EeConfigurationTask, JointLimitTask,
                              ObstacleTask, VirtualWallTask>;

struct TaskSpec {
  std::string name;
  TaskKind kind;
  TaskMode mode = TaskMode::equality;
  SetBasedThresholds thresholds;
  Eigen::VectorXd gain;  // diagonal of K
  PriorityGroup group = PriorityGroup::operational;

  bool set_based() const { return mode == TaskMode::set_based; }

  int dimension() const {
    if (std::holds_alternative<EePositionTask>(kind)) return 3;
    if (std::holds_alternative<EeConfigurationTask>(kind)) return 6;
    return 1;
  }
};

inline double default_gain(PriorityGroup g) {
  return g == PriorityGroup::safety ? 1.0 : 0.8;
}

inline const char* to_string(PriorityGroup g) {
  switch (g) {
    case PriorityGroup::safety: return "safety";
    case PriorityGroup::operational: return "operational";
    case PriorityGroup::optimization: return "optimization";
  }
  return "?";
}

inline const char* kind_name(const TaskKind& k) {
  struct V {
    const char* operator()(const EePositionTask&) const { return "ee_position"; }
    const char* operator()(const EeConfigurationTask&) const { return "ee_configuration"; }
    const char* operator()(const JointLimitTask&) const { return "joint_limit"; }
    const char* operator()(const ObstacleTask&) const { return "obstacle_avoidance"; }
    const char* operator()(const VirtualWallTask&) const { return "virtual_wall"; }
  };
  return std::visit(V{}, k);
}

// Throws std::invalid_argument naming the offending task.
inline void validate_task(const TaskSpec& t, int dof) {
  const auto fail = [&](const std::string& what) {
    throw std::invalid_argument("task '" + t.name + "': " + what);
  };
  if (t.gain.size() != t.dimension())
    fail("gain needs " + std::to_string(t.dimension()) + " entries");
  if (!(t.gain.array() > 0.0).all() || !t.gain.allFinite()) fail("gains must be positive");
  if (const auto* jl = std::get_if<JointLimitTask>(&t.kind)) {
    if (jl->joint < 1 || jl->joint > dof) fail("joint index out of range");
  }
  if (const auto* ob = std::get_if<ObstacleTask>(&t.kind)) {
    if (ob->link < 1 || ob->link > dof) fail("control link out of range");
  }
  if (t.set_based()) {
    if (t.dimension() != 1) fail("set-based tasks must be scalar");
    if (auto v = t.thresholds.violation(); !v.empty()) fail("threshold chain: " + v);
  }
}

// Tasks must be declared safety first, then operational, then optimization.
inline void validate_hierarchy(const std::vector<TaskSpec>& tasks, int dof) {
  if (tasks.empty()) throw std::invalid_argument("hierarchy must be non-empty");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    validate_task(tasks[i], dof);
    if (i > 0 && tasks[i].group < tasks[i - 1].group)
      throw std::invalid_argument("task '" + tasks[i].name + "' (" +
                                  to_string(tasks[i].group) + ") declared after '" +
                                  tasks[i - 1].name + "' (" +
                                  to_string(tasks[i - 1].group) +
                                  "): groups must be ordered safety, operational, "
                                  "optimization");
  }
}

struct TaskEvaluation {
  Eigen::VectorXd sigma;
  Jacobian jacobian;
  Eigen::VectorXd sigma_d;
  Eigen::VectorXd sigma_d_dot;

  Eigen::VectorXd error() const { return sigma_d - sigma; }
};

namespace detail {

inline TaskEvaluation scalar_eval(double sigma, Jacobian row) {
  TaskEvaluation e;
  e.sigma = Eigen::VectorXd::Constant(1, sigma);
  e.jacobian = std::move(row);
  e.sigma_d = e.sigma;
  e.sigma_d_dot = Eigen::VectorXd::Zero(1);
  return e;
}

}  // namespace detail

inline TaskEvaluation eval_ee_position(const ArmModel& model, const JointVector& q,
                                       const Eigen::Vector3d& target) {
  const auto frames = link_frames(model, q);
  TaskEvaluation e;
  e.sigma = frames.back().translation();
  e.jacobian = geometric_jacobian(model, q).topRows(3);
  e.sigma_d = target;
  e.sigma_d_dot = Eigen::VectorXd::Zero(3);
  return e;
}

// Orientation error is the vector part of q_d * q^-1, taken in the
// hemisphere with non-negative scalar part. It has no natural "current
// value", so the rotational rows carry sigma = 0 and sigma_d = error.
inline Eigen::Vector3d orientation_error(const Eigen::Quaterniond& desired,
                                         const Eigen::Quaterniond& current) {
  Eigen::Quaterniond e = desired * current.inverse();
  if (e.w() < 0.0) e.coeffs() = -e.coeffs();
  return e.vec();
}

inline TaskEvaluation eval_ee_configuration(const ArmModel& model, const JointVector& q,
                                            const Eigen::Vector3d& target_position,
                                            const Eigen::Quaterniond& target_orientation) {
  const Pose pose = Pose::from(link_frames(model, q).back());
  TaskEvaluation e;
  e.sigma = Eigen::VectorXd::Zero(6);
  e.sigma.head<3>() = pose.position;
  e.sigma_d = Eigen::VectorXd::Zero(6);
  e.sigma_d.head<3>() = target_position;
  e.sigma_d.tail<3>() = orientation_error(target_orientation.normalized(), pose.orientation);
  e.jacobian = geometric_jacobian(model, q);
  e.sigma_d_dot = Eigen::VectorXd::Zero(6);
  return e;
}

// joint_index is 1-based.
inline TaskEvaluation eval_joint_limit(const JointVector& q, int joint_index) {
  if (joint_index < 1 || joint_index > q.size())
    throw std::out_of_range("joint index " + std::to_string(joint_index));
  Jacobian row = Jacobian::Zero(1, q.size());
  row(0, joint_index - 1) = 1.0;
  return detail::scalar_eval(q[joint_index - 1], std::move(row));
}

inline TaskEvaluation eval_obstacle_avoidance(const Eigen::Vector3d& control_point,
                                             const Eigen::Vector3d& obstacle_point,
                                             const Jacobian& truncated) {
  const Eigen::Vector3d v = obstacle_point - control_point;
  const double dist = v.norm();
  if (!(dist >= 1e-6))
    throw DegenerateDistanceError("control point touches obstacle (distance " +
                                  std::to_string(dist) + " m)");
  return detail::scalar_eval(dist, -(v / dist).transpose() * truncated);
}

inline TaskEvaluation eval_virtual_wall(const ArmModel& model, const JointVector& q,
                                        Axis axis) {
  const int r = static_cast<int>(axis);
  const auto frames = link_frames(model, q);
  return detail::scalar_eval(frames.back().translation()[r],
                             geometric_jacobian(model, q).row(r));
}

// Thresholds of a wall plane at `offset`. A min wall bounds the coordinate
// from below, a max wall from above; the physical bound sits `physical_margin`
// beyond the plane.
inline SetBasedThresholds wall_thresholds(WallSide side, double offset,
                                          double epsilon = 0.05,
                                          double physical_margin = 0.1) {
  return side == WallSide::min
             ? SetBasedThresholds::lower(offset - physical_margin, offset, epsilon)
             : SetBasedThresholds::upper(offset, offset + physical_margin, epsilon);
}

// Desired value of an activated set-based task, or nullopt when sigma is
// strictly inside the activation band.
inline std::optional<double> set_based_desired(double sigma, const SetBasedThresholds& th) {
  if (th.has_upper() && sigma >= th.au()) return th.su;
  if (th.has_lower() && sigma <= th.al()) return th.sl;
  return std::nullopt;
}

// As set_based_desired, but a sigma strictly inside the activation band is an
// error.
inline double boundary_value(double sigma, const SetBasedThresholds& th) {
  if (auto d = set_based_desired(sigma, th)) return *d;
  throw NotAtBoundaryError("sigma " + std::to_string(sigma) + " is inside the activation band");
}

inline bool beyond_activation(double sigma, const SetBasedThresholds& th) {
  return set_based_desired(sigma, th).has_value();
}

// Strict inequalities on J_A qdot: a zero projection keeps the task active.
// A positive tolerance widens that dead band to |J_A qdot| <= tolerance.
// external_rate is the part of sigma's rate not caused by the arm (a moving
// obstacle); the task is released only if the arm also outruns it.
inline bool may_deactivate(double sigma, const Eigen::RowVectorXd& task_jacobian,
                           const Eigen::VectorXd& qdot_candidate,
                           const SetBasedThresholds& th, double tolerance = 0.0,
                           double external_rate = 0.0) {
  const double rate = task_jacobian.dot(qdot_candidate);
  const double total = rate + external_rate;
  return (th.has_upper() && sigma >= th.au() && rate < -tolerance && total < -tolerance) ||
         (th.has_lower() && sigma <= th.al() && rate > tolerance && total > tolerance);
}

}  // namespace tpik
