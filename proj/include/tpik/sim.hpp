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
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tpik/perception.hpp"
#include "tpik/scenario.hpp"
#include "tpik/solver.hpp"
#include "tpik/tasks.hpp"

namespace tpik {

// Single-writer slot: readers always get the most recently published value
// and never wait on the writer for longer than a copy.
template <typename T>
class LatestWins {
 public:
  LatestWins() = default;
  LatestWins(const LatestWins& o) : value_(o.latest()), sequence_(o.sequence()) {}
  LatestWins& operator=(const LatestWins& o) {
    if (this != &o) {
      T v = o.latest();
      const unsigned long s = o.sequence();
      std::lock_guard lock(mutex_);
      value_ = std::move(v);
      sequence_ = s;
    }
    return *this;
  }

  void publish(T v) {
    std::lock_guard lock(mutex_);
    value_ = std::move(v);
    ++sequence_;
  }
  T latest() const {
    std::lock_guard lock(mutex_);
    return value_;
  }
  unsigned long sequence() const {
    std::lock_guard lock(mutex_);
    return sequence_;
  }

 private:
  mutable std::mutex mutex_;
  T value_{};
  unsigned long sequence_ = 0;
};

struct LogRow {
  double t = 0.0;
  JointVector q;
  JointVector qdot;
  Pose ee;
  int waypoint = 0;
  int reached = 0;  // waypoints whose reach condition has held at least once
  double pos_err = 0.0;
  std::vector<double> sigma;  // scalar tasks: value; vector tasks: error norm
  std::vector<bool> active;
  std::vector<double> lambda;
  // One entry per obstacle task, in declaration order.
  std::vector<bool> valid;
  std::vector<Eigen::Vector3d> obstacle_point;
  std::vector<double> true_distance;  // ground truth from the scene geometry
  bool estop = false;
  bool saturated = false;
};

struct ScenarioLog {
  std::vector<std::string> task_names;
  std::vector<int> obstacle_tasks;  // indices into task_names
  int dof = 0;
  std::vector<LogRow> rows;

  bool any_estop() const {
    for (const auto& r : rows)
      if (r.estop) return true;
    return false;
  }

  std::vector<std::string> header(const std::vector<TaskSpec>& tasks) const {
    std::vector<std::string> h{"t"};
    for (int i = 1; i <= dof; ++i) h.push_back("q" + std::to_string(i));
    for (int i = 1; i <= dof; ++i) h.push_back("qdot" + std::to_string(i));
    for (const char* c : {"ee_x", "ee_y", "ee_z", "ee_qw", "ee_qx", "ee_qy", "ee_qz",
                          "waypoint", "reached", "pos_err"})
      h.emplace_back(c);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const std::string& n = tasks[i].name;
      h.push_back((tasks[i].dimension() == 1 ? "sigma_" : "err_") + n);
      h.push_back("active_" + n);
      h.push_back("lambda_" + n);
    }
    for (int k : obstacle_tasks) {
      const std::string& n = task_names[k];
      for (const char* p : {"valid_", "ox_", "oy_", "oz_", "truedist_"}) h.push_back(p + n);
    }
    h.emplace_back("estop");
    h.emplace_back("saturated");
    return h;
  }

  void write_csv(std::ostream& out, const std::vector<TaskSpec>& tasks) const {
    const auto h = header(tasks);
    for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
    out << "\n";
    char buf[64];
    const auto num = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.9g", v);
      out << ',' << buf;
    };
    for (const LogRow& r : rows) {
      std::snprintf(buf, sizeof buf, "%.9g", r.t);
      out << buf;
      for (int i = 0; i < dof; ++i) num(r.q[i]);
      for (int i = 0; i < dof; ++i) num(r.qdot[i]);
      for (int i = 0; i < 3; ++i) num(r.ee.position[i]);
      num(r.ee.orientation.w());
      num(r.ee.orientation.x());
      num(r.ee.orientation.y());
      num(r.ee.orientation.z());
      out << ',' << r.waypoint << ',' << r.reached;
      num(r.pos_err);
      for (std::size_t i = 0; i < r.sigma.size(); ++i) {
        num(r.sigma[i]);
        out << ',' << int(r.active[i]);
        num(r.lambda[i]);
      }
      for (std::size_t k = 0; k < r.valid.size(); ++k) {
        out << ',' << int(r.valid[k]);
        for (int i = 0; i < 3; ++i) num(r.obstacle_point[k][i]);
        num(r.true_distance[k]);
      }
      out << ',' << int(r.estop) << ',' << int(r.saturated) << "\n";
    }
  }

  std::string csv(const std::vector<TaskSpec>& tasks) const {
    std::ostringstream s;
    write_csv(s, tasks);
    return s.str();
  }
};

struct SimState {
  JointVector q;
  int waypoint = 0;
  int reached = 0;
  SolverState solver;
  LatestWins<DistanceResult> distances;
  // Closest-point velocity per control point from the last two refreshes.
  std::vector<Eigen::Vector3d> obstacle_velocity;
  int perception_refreshes = 0;
  LogRow last;  // record of the most recent step
};

inline std::vector<int> obstacle_task_indices(const std::vector<TaskSpec>& tasks) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (std::holds_alternative<ObstacleTask>(tasks[i].kind)) idx.push_back(static_cast<int>(i));
  return idx;
}

// Control points (base frame) of the obstacle tasks, in declaration order.
inline std::vector<Eigen::Vector3d> control_points(const Scenario& sc, const JointVector& q) {
  std::vector<Eigen::Vector3d> cps;
  const auto frames = link_frames(sc.arm, q);
  for (int k : obstacle_task_indices(sc.tasks)) {
    const auto& ob = std::get<ObstacleTask>(sc.tasks[k].kind);
    cps.push_back(frames[ob.link] * ob.offset);
  }
  return cps;
}

// Obstacles at time t in arm-base coordinates.
inline std::vector<Primitive> scene_at(const Scenario& sc, double t) {
  const Eigen::Isometry3d world_to_base = sc.arm.base_frame.inverse();
  std::vector<Primitive> scene;
  for (const auto& o : sc.obstacles) scene.push_back(transformed(o.at(t), world_to_base));
  return scene;
}

// Raw synthetic frame: obstacles plus the robot's own link boxes.
inline DepthImage render_frame(const Scenario& sc, const JointVector& q, double t) {
  std::vector<Primitive> scene = scene_at(sc, t);
  for (auto& p : robot_primitives(sc.arm, q, sc.perception.link_radius)) scene.push_back(p);
  return render_depth(scene, sc.camera, sc.perception.depth_quantum);
}

inline DistanceResult perceive(const Scenario& sc, const JointVector& q, double t) {
  const auto cps = control_points(sc, q);
  DistanceResult r;
  if (sc.mode == PerceptionMode::exact_geometry) {
    r = exact_min_distance(scene_at(sc, t), cps, sc.perception.rho);
  } else {
    const DepthImage img = remove_robot(render_frame(sc, q, t), sc.arm, q,
                                        sc.perception.inflation, sc.perception.link_radius);
    std::vector<SurveillanceRegion> regions;
    for (const auto& p : cps) regions.push_back({sc.camera.extrinsic * p, sc.perception.rho});
    r = min_distance_search(img, regions);
  }
  for (auto& p : r.points) p.timestamp = t;
  return r;
}

inline SimState initial_state(const Scenario& sc) {
  SimState s;
  s.q = sc.q0;
  s.solver.active.assign(sc.tasks.size(), false);
  DistanceResult none;
  none.points.resize(obstacle_task_indices(sc.tasks).size());
  s.obstacle_velocity.assign(none.points.size(), Eigen::Vector3d::Zero());
  s.distances.publish(std::move(none));
  return s;
}

// One control tick: waypoint bookkeeping, perception refresh on its cadence,
// the prioritized solve, then explicit Euler with a hard clamp to the joint
// limits. state.last receives the tick's log record.
inline SimState step(const SimState& in, const Scenario& sc, int tick_index) {
  SimState s = in;
  const double dt = 1.0 / sc.control_hz;
  const double t = tick_index * dt;
  const auto frames = link_frames(sc.arm, s.q);
  const Eigen::Vector3d ee = frames.back().translation();

  double pos_err = 0.0;
  if (!sc.waypoints.targets.empty()) {
    const int last = static_cast<int>(sc.waypoints.targets.size()) - 1;
    pos_err = (ee - sc.waypoints.targets[s.waypoint]).norm();
    while (pos_err < sc.waypoints.tolerance) {
      s.reached = std::max(s.reached, s.waypoint + 1);
      if (s.waypoint == last) break;
      ++s.waypoint;
      pos_err = (ee - sc.waypoints.targets[s.waypoint]).norm();
    }
  }

  if (tick_index % sc.perception_stride() == 0) {
    const DistanceResult previous = s.distances.latest();
    DistanceResult fresh = perceive(sc, s.q, t);
    const double period = sc.perception_stride() * dt;
    for (std::size_t k = 0; k < fresh.points.size(); ++k) {
      const bool both = previous.points[k].valid && fresh.points[k].valid;
      s.obstacle_velocity[k] =
          both ? Eigen::Vector3d((fresh.points[k].obstacle_point -
                                  previous.points[k].obstacle_point) / period)
               : Eigen::Vector3d::Zero();
    }
    s.distances.publish(std::move(fresh));
    ++s.perception_refreshes;
  }
  const DistanceResult dist = s.distances.latest();

  const Eigen::Vector3d target =
      sc.waypoints.targets.empty() ? ee : sc.waypoints.targets[s.waypoint];
  const int n = sc.arm.dof();
  std::vector<TaskInput> inputs(sc.tasks.size());
  LogRow row;
  std::size_t ob = 0;
  for (std::size_t i = 0; i < sc.tasks.size(); ++i) {
    const TaskSpec& spec = sc.tasks[i];
    TaskInput& in_i = inputs[i];
    if (std::holds_alternative<EePositionTask>(spec.kind)) {
      in_i.eval = eval_ee_position(sc.arm, s.q, target);
    } else if (const auto* c = std::get_if<EeConfigurationTask>(&spec.kind)) {
      in_i.eval = eval_ee_configuration(sc.arm, s.q, target, c->orientation);
    } else if (const auto* jl = std::get_if<JointLimitTask>(&spec.kind)) {
      in_i.eval = eval_joint_limit(s.q, jl->joint);
    } else if (const auto* w = std::get_if<VirtualWallTask>(&spec.kind)) {
      in_i.eval = eval_virtual_wall(sc.arm, s.q, w->axis);
    } else if (const auto* o = std::get_if<ObstacleTask>(&spec.kind)) {
      const Eigen::Vector3d& obstacle_velocity = s.obstacle_velocity[ob];
      const ControlPointDistance& m = dist.points[ob++];
      row.valid.push_back(m.valid);
      row.obstacle_point.push_back(m.obstacle_point);
      const Eigen::Vector3d p = frames[o->link] * o->offset;
      bool ok = false;
      if (m.valid) {
        try {
          in_i.eval = eval_obstacle_avoidance(
              p, m.obstacle_point, positional_jacobian_truncated(sc.arm, s.q, o->link, o->offset));
          in_i.external_rate = -(p - m.obstacle_point).normalized().dot(obstacle_velocity);
          ok = true;
        } catch (const DegenerateDistanceError&) {
          in_i.degenerate = true;
        }
      }
      if (!ok) {
        in_i.available = false;
        in_i.eval.sigma = Eigen::VectorXd::Constant(1, m.valid ? 0.0 : kInf);
        in_i.eval.jacobian = Jacobian::Zero(1, n);
        in_i.eval.sigma_d = in_i.eval.sigma;
        in_i.eval.sigma_d_dot = Eigen::VectorXd::Zero(1);
      }
      double truth = kInf;
      for (const Primitive& prim : scene_at(sc, t)) {
        const Eigen::Vector3d c_pt = closest_point(prim, p);
        if (c_pt.allFinite()) truth = std::min(truth, (c_pt - p).norm());
      }
      row.true_distance.push_back(truth);
    }
  }

  const SolverOutput out = solve_tick(sc.tasks, inputs, s.solver, sc.solver);
  const JointVector qdot = out.emergency_stop ? JointVector::Zero(n) : out.qdot;

  row.t = t;
  row.q = s.q;
  row.qdot = qdot;
  row.ee = Pose::from(frames.back());
  row.waypoint = s.waypoint;
  row.reached = s.reached;
  row.pos_err = pos_err;
  for (std::size_t i = 0; i < sc.tasks.size(); ++i) {
    const TaskInput& in_i = inputs[i];
    row.sigma.push_back(sc.tasks[i].dimension() == 1 ? in_i.eval.sigma[0]
                                                     : in_i.eval.error().norm());
    row.active.push_back(out.active[i]);
    row.lambda.push_back(out.lambda[i]);
  }
  row.estop = out.emergency_stop;
  row.saturated = out.saturated;

  JointVector next = s.q + qdot * dt;
  for (int j = 0; j < n; ++j)
    next[j] = std::clamp(next[j], sc.arm.joint_limits[j].min, sc.arm.joint_limits[j].max);
  s.q = next;
  s.last = std::move(row);
  return s;
}

// Runs the whole scenario; throws std::invalid_argument before tick 0 when
// the configuration is inconsistent.
inline ScenarioLog run(const Scenario& sc) {
  sc.validate();
  ScenarioLog log;
  log.dof = sc.arm.dof();
  for (const auto& t : sc.tasks) log.task_names.push_back(t.name);
  log.obstacle_tasks = obstacle_task_indices(sc.tasks);
  const int ticks = sc.tick_count();
  log.rows.reserve(ticks);
  SimState s = initial_state(sc);
  for (int k = 0; k < ticks; ++k) {
    s = step(s, sc, k);
    log.rows.push_back(s.last);
  }
  return log;
}

}  // namespace tpik
