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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpik/camera.hpp"
#include "tpik/geometry.hpp"
#include "tpik/kinematics.hpp"
#include "tpik/perception.hpp"
#include "tpik/solver.hpp"
#include "tpik/tasks.hpp"

namespace tpik {

inline constexpr double kMaxObstacleSpeed = 1.5;  // m/s

struct ObstacleWaypoint {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

// A primitive defined around its own origin, translated along a
// piecewise-linear path (world frame). Before the first and after the last
// waypoint the obstacle rests at the end points.
struct ObstacleScript {
  std::string name;
  Primitive shape;
  std::vector<ObstacleWaypoint> path;

  Eigen::Vector3d position(double t) const {
    if (path.empty()) return Eigen::Vector3d::Zero();
    if (t <= path.front().t) return path.front().position;
    if (t >= path.back().t) return path.back().position;
    const auto it = std::upper_bound(path.begin(), path.end(), t,
                                     [](double v, const ObstacleWaypoint& w) { return v < w.t; });
    const ObstacleWaypoint& b = *it;
    const ObstacleWaypoint& a = *(it - 1);
    const double s = (t - a.t) / (b.t - a.t);
    return a.position + s * (b.position - a.position);
  }

  Primitive at(double t) const {
    Eigen::Isometry3d tr = Eigen::Isometry3d::Identity();
    tr.translation() = position(t);
    return transformed(shape, tr);
  }

  double max_speed() const {
    double v = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
      v = std::max(v, (path[i].position - path[i - 1].position).norm() /
                          (path[i].t - path[i - 1].t));
    return v;
  }

  void validate() const {
    if (path.empty()) throw std::invalid_argument("obstacle '" + name + "' has no path");
    for (std::size_t i = 1; i < path.size(); ++i)
      if (!(path[i].t > path[i - 1].t))
        throw std::invalid_argument("obstacle '" + name + "': waypoint times must increase");
    if (max_speed() > kMaxObstacleSpeed + 1e-12)
      throw std::invalid_argument("obstacle '" + name + "' moves faster than 1.5 m/s");
  }
};

// Stand-in for a person: an upright box (width x depth x height) whose centre
// follows the given path.
struct PersonProxySpec {
  std::string name = "person";
  double width = 0.4;
  double depth = 0.25;
  double height = 1.8;
  std::vector<ObstacleWaypoint> path;
};

inline ObstacleScript person_proxy(const PersonProxySpec& spec) {
  ObstacleScript s;
  s.name = spec.name;
  s.shape = Box::axis_aligned(Eigen::Vector3d::Zero(),
                              0.5 * Eigen::Vector3d(spec.width, spec.depth, spec.height));
  s.path = spec.path;
  s.validate();
  return s;
}

enum class PerceptionMode { exact_geometry, synthetic_camera };

struct PerceptionParams {
  double rho = 0.5;
  double inflation = kDefaultInflation;
  double link_radius = kDefaultLinkRadius;
  double depth_quantum = 0.001;  // 0 disables quantization
};

struct Waypoints {
  std::vector<Eigen::Vector3d> targets;
  double tolerance = 0.01;
};

struct Scenario {
  std::string name = "scenario";
  ArmModel arm;
  JointVector q0;
  std::vector<TaskSpec> tasks;
  Waypoints waypoints;
  std::vector<ObstacleScript> obstacles;
  CameraModel camera;
  PerceptionParams perception;
  PerceptionMode mode = PerceptionMode::exact_geometry;
  SolverParams solver;
  double control_hz = 100.0;
  double perception_hz = 30.0;
  double duration = 60.0;

  bool needs_target() const {
    return std::any_of(tasks.begin(), tasks.end(), [](const TaskSpec& t) {
      return std::holds_alternative<EePositionTask>(t.kind) ||
             std::holds_alternative<EeConfigurationTask>(t.kind);
    });
  }

  int tick_count() const { return static_cast<int>(std::llround(duration * control_hz)); }

  // Control ticks between perception refreshes.
  int perception_stride() const {
    return std::max(1, static_cast<int>(std::floor(control_hz / perception_hz + 1e-9)));
  }

  // Throws std::invalid_argument on the first violated invariant.
  void validate() const {
    arm.validate();
    if (q0.size() != arm.dof())
      throw std::invalid_argument("initial q needs " + std::to_string(arm.dof()) + " values");
    if (!q0.allFinite()) throw std::invalid_argument("initial q is not finite");
    validate_hierarchy(tasks, arm.dof());
    if (needs_target() && waypoints.targets.empty())
      throw std::invalid_argument("end-effector task declared without waypoints");
    if (!(waypoints.tolerance > 0.0))
      throw std::invalid_argument("waypoint tolerance must be positive");
    for (const auto& o : obstacles) o.validate();
    camera.validate();
    if (!(perception.rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (!(perception.inflation >= 0.0))
      throw std::invalid_argument("inflation must be non-negative");
    if (!(perception_hz > 0.0) || !(control_hz >= perception_hz))
      throw std::invalid_argument("rates must satisfy control_hz >= perception_hz > 0");
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
    solver.validate();
  }
};

}  // namespace tpik
