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
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "tpik/camera.hpp"
#include "tpik/geometry.hpp"
#include "tpik/kinematics.hpp"

namespace tpik {

inline constexpr double kDefaultLinkRadius = 0.05;
inline constexpr double kDefaultInflation = 0.05;

// One oriented box per link, spanning the segment between consecutive frame
// origins with `radius + inflation` of clearance on every side. Base
// coordinates.
inline std::vector<Box> robot_link_boxes(const ArmModel& model, const JointVector& q,
                                         double radius = kDefaultLinkRadius,
                                         double inflation = 0.0) {
  const auto frames = link_frames(model, q);
  const double pad = radius + inflation;
  std::vector<Box> boxes;
  boxes.reserve(model.joints.size());
  for (int i = 1; i <= model.dof(); ++i) {
    const Eigen::Vector3d a = frames[i - 1].translation();
    const Eigen::Vector3d b = frames[i].translation();
    const Eigen::Vector3d seg = b - a;
    const double len = seg.norm();
    Eigen::Matrix3d rot;
    if (len > 1e-9) {
      const Eigen::Vector3d x = seg / len;
      const Eigen::Vector3d y = x.unitOrthogonal();
      rot << x, y, x.cross(y);
    } else {
      rot = frames[i].linear();
    }
    Box box;
    box.pose.linear() = rot;
    box.pose.translation() = 0.5 * (a + b);
    box.half_extents = Eigen::Vector3d(0.5 * len + pad, pad, pad);
    boxes.push_back(box);
  }
  return boxes;
}

inline std::vector<Primitive> robot_primitives(const ArmModel& model, const JointVector& q,
                                               double radius = kDefaultLinkRadius) {
  std::vector<Primitive> out;
  for (const Box& b : robot_link_boxes(model, q, radius)) out.emplace_back(b);
  return out;
}

// Clears every pixel whose back-projected point falls inside an inflated link
// box.
inline DepthImage remove_robot(const DepthImage& img, const ArmModel& model,
                               const JointVector& q, double inflation = kDefaultInflation,
                               double radius = kDefaultLinkRadius) {
  const CameraModel& cam = img.camera;
  // Camera-to-box transforms, so the per-pixel test is a single transform.
  std::vector<std::pair<Eigen::Isometry3d, Eigen::Vector3d>> boxes;
  for (const Box& b : robot_link_boxes(model, q, radius, inflation))
    boxes.emplace_back((cam.extrinsic * b.pose).inverse(), b.half_extents);
  DepthImage out = img;
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      double& d = out.at(row, col);
      if (!std::isfinite(d)) continue;
      const Eigen::Vector3d p = depth_to_cartesian({double(col), double(row), d}, cam);
      for (const auto& [to_box, half] : boxes) {
        if (((to_box * p).cwiseAbs() - half).maxCoeff() <= 0.0) {
          d = std::numeric_limits<double>::infinity();
          break;
        }
      }
    }
  }
  return out;
}

// Cube of side 2 rho around a control point given in camera coordinates.
struct SurveillanceRegion {
  Eigen::Vector3d control_point = Eigen::Vector3d::Zero();
  double rho = 0.5;

  bool contains(const Eigen::Vector3d& p) const {
    return (p - control_point).cwiseAbs().maxCoeff() <= rho;
  }
};

struct ControlPointDistance {
  bool valid = false;
  double distance = std::numeric_limits<double>::infinity();
  Eigen::Vector3d obstacle_point = Eigen::Vector3d::Zero();  // base frame
  Eigen::Vector3d vector = Eigen::Vector3d::Zero();          // O - P, base frame
  int row = -1, col = -1;                                    // argmin pixel
  double timestamp = 0.0;
};

struct DistanceResult {
  std::vector<ControlPointDistance> points;
};

namespace detail {

inline PixelRect region_rect(const SurveillanceRegion& r, const CameraModel& cam) {
  const Eigen::Vector3d lo = r.control_point.array() - r.rho;
  const Eigen::Vector3d hi = r.control_point.array() + r.rho;
  return project_bounds(lo, hi, cam);
}

}  // namespace detail

// Closest depth pixel to each control point inside its surveillance cube.
// Only the pixel rectangle covering the cube's projection is scanned; ties go
// to the smallest row, then column. Distances are formed in depth space and
// the winner is mapped to base coordinates.
inline DistanceResult min_distance_search(const DepthImage& img,
                                          std::span<const SurveillanceRegion> regions) {
  const CameraModel& cam = img.camera;
  const Eigen::Isometry3d cam_to_base = cam.extrinsic.inverse();
  DistanceResult result;
  result.points.resize(regions.size());
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const SurveillanceRegion& region = regions[k];
    if (!(region.control_point.z() > 0.0)) continue;  // behind the sensor: unobservable
    const DepthPoint pd = project_to_depth(region.control_point, cam);
    const detail::PixelRect r = detail::region_rect(region, cam);
    const int c0 = std::max(r.col0, 0), c1 = std::min(r.col1, cam.width - 1);
    const int r0 = std::max(r.row0, 0), r1 = std::min(r.row1, cam.height - 1);
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_v = Eigen::Vector3d::Zero();
    int best_row = -1, best_col = -1;
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const double d = img.at(row, col);
        if (!std::isfinite(d)) continue;
        const DepthPoint od{double(col), double(row), d};
        if (!region.contains(depth_to_cartesian(od, cam))) continue;
        const Eigen::Vector3d v = distance_vector(pd, od, cam);
        const double dist2 = v.squaredNorm();
        if (dist2 < best) {
          best = dist2;
          best_v = v;
          best_row = row;
          best_col = col;
        }
      }
    }
    ControlPointDistance& out = result.points[k];
    if (best_row < 0) continue;
    out.valid = true;
    out.distance = std::sqrt(best);
    out.row = best_row;
    out.col = best_col;
    out.vector = cam_to_base.linear() * best_v;
    out.obstacle_point = cam_to_base * (region.control_point + best_v);
  }
  return result;
}

// Analytic counterpart: closest point over all primitives (base frame) that
// lies inside each control point's surveillance cube.
inline DistanceResult exact_min_distance(const std::vector<Primitive>& scene,
                                         std::span<const Eigen::Vector3d> control_points,
                                         double rho) {
  DistanceResult result;
  result.points.resize(control_points.size());
  for (std::size_t k = 0; k < control_points.size(); ++k) {
    const Eigen::Vector3d& p = control_points[k];
    ControlPointDistance& out = result.points[k];
    for (const Primitive& prim : scene) {
      const Eigen::Vector3d o = closest_point(prim, p);
      if (!o.allFinite() || (o - p).cwiseAbs().maxCoeff() > rho) continue;
      const double d = (o - p).norm();
      if (d < out.distance) {
        out.valid = true;
        out.distance = d;
        out.obstacle_point = o;
        out.vector = o - p;
      }
    }
  }
  return result;
}

}  // namespace tpik
