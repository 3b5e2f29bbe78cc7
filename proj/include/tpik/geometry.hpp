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
#include <array>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "tpik/camera.hpp"

namespace tpik {

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.1;
};

// Box with half extents along its own axes; `pose` maps box coordinates to
// the enclosing frame (identity rotation for an axis-aligned box).
struct Box {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Constant(0.1);

  static Box axis_aligned(const Eigen::Vector3d& center, const Eigen::Vector3d& half) {
    Box b;
    b.pose.translation() = center;
    b.half_extents = half;
    return b;
  }

  bool contains(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d local = pose.inverse() * p;
    return (local.cwiseAbs() - half_extents).maxCoeff() <= 0.0;
  }
};

struct PointSet {
  std::vector<Eigen::Vector3d> points;
};

using Primitive = std::variant<Sphere, Box, PointSet>;

// Applies a rigid transform to a primitive.
inline Primitive transformed(const Primitive& prim, const Eigen::Isometry3d& t) {
  struct V {
    const Eigen::Isometry3d& t;
    Primitive operator()(const Sphere& s) const { return Sphere{t * s.center, s.radius}; }
    Primitive operator()(const Box& b) const { return Box{t * b.pose, b.half_extents}; }
    Primitive operator()(const PointSet& ps) const {
      PointSet out;
      out.points.reserve(ps.points.size());
      for (const auto& p : ps.points) out.points.push_back(t * p);
      return out;
    }
  };
  return std::visit(V{t}, prim);
}

// Closest point of the primitive's solid to p (p itself when inside).
inline Eigen::Vector3d closest_point(const Primitive& prim, const Eigen::Vector3d& p) {
  struct V {
    const Eigen::Vector3d& p;
    Eigen::Vector3d operator()(const Sphere& s) const {
      const Eigen::Vector3d d = p - s.center;
      const double n = d.norm();
      if (n <= s.radius) return p;
      return s.center + d * (s.radius / n);
    }
    Eigen::Vector3d operator()(const Box& b) const {
      const Eigen::Vector3d local = b.pose.inverse() * p;
      const Eigen::Vector3d clamped = local.cwiseMax(-b.half_extents).cwiseMin(b.half_extents);
      return b.pose * clamped;
    }
    Eigen::Vector3d operator()(const PointSet& ps) const {
      Eigen::Vector3d best = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& q : ps.points) {
        const double d = (q - p).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = q;
        }
      }
      return best;
    }
  };
  return std::visit(V{p}, prim);
}

namespace detail {

// Smallest positive ray parameter for origin 0 and direction `dir`, or +inf.
inline double ray_hit(const Sphere& s, const Eigen::Vector3d& dir) {
  const double a = dir.squaredNorm();
  const double b = -2.0 * dir.dot(s.center);
  const double c = s.center.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double root = std::sqrt(disc);
  const double t0 = (-b - root) / (2.0 * a);
  const double t1 = (-b + root) / (2.0 * a);
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return std::numeric_limits<double>::infinity();
}

inline double ray_hit(const Box& box, const Eigen::Vector3d& dir) {
  const Eigen::Isometry3d inv = box.pose.inverse();
  const Eigen::Vector3d o = inv.translation();
  const Eigen::Vector3d d = inv.linear() * dir;
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double h = box.half_extents[k];
    if (d[k] == 0.0) {
      if (o[k] < -h || o[k] > h) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (-h - o[k]) / d[k];
    double tb = (h - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    tmin = std::max(tmin, ta);
    tmax = std::min(tmax, tb);
    if (tmin > tmax) return std::numeric_limits<double>::infinity();
  }
  if (tmin > 0.0) return tmin;
  if (tmax > 0.0) return tmax;
  return std::numeric_limits<double>::infinity();
}

struct PixelRect {
  int col0, col1, row0, row1;  // inclusive
};

inline PixelRect full_rect(const CameraModel& cam) {
  return {0, cam.width - 1, 0, cam.height - 1};
}

// Conservative pixel rectangle covering the projection of an axis-aligned
// camera-frame bounding box; the full image when it reaches behind the camera.
inline PixelRect project_bounds(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                                const CameraModel& cam) {
  if (!(lo.z() > 0.0)) return full_rect(cam);
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (int c = 0; c < 8; ++c) {
    const Eigen::Vector3d p((c & 1) ? hi.x() : lo.x(), (c & 2) ? hi.y() : lo.y(),
                            (c & 4) ? hi.z() : lo.z());
    const DepthPoint dp = project_to_depth(p, cam);
    umin = std::min(umin, dp.p_x);
    umax = std::max(umax, dp.p_x);
    vmin = std::min(vmin, dp.p_y);
    vmax = std::max(vmax, dp.p_y);
  }
  const auto clampi = [](double v, int hi_) {
    return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(hi_ + 1)));
  };
  return {clampi(std::floor(umin) - 1, cam.width), clampi(std::ceil(umax) + 1, cam.width),
          clampi(std::floor(vmin) - 1, cam.height), clampi(std::ceil(vmax) + 1, cam.height)};
}

inline void camera_aabb(const Sphere& s, Eigen::Vector3d& lo, Eigen::Vector3d& hi) {
  lo = s.center.array() - s.radius;
  hi = s.center.array() + s.radius;
}

inline void camera_aabb(const Box& b, Eigen::Vector3d& lo, Eigen::Vector3d& hi) {
  const Eigen::Vector3d ext = b.pose.linear().cwiseAbs() * b.half_extents;
  lo = b.pose.translation() - ext;
  hi = b.pose.translation() + ext;
}

template <typename Shape>
void rasterize(const Shape& shape, DepthImage& img) {
  const CameraModel& cam = img.camera;
  Eigen::Vector3d lo, hi;
  camera_aabb(shape, lo, hi);
  const PixelRect r = project_bounds(lo, hi, cam);
  const int c0 = std::max(r.col0, 0), c1 = std::min(r.col1, cam.width - 1);
  const int r0 = std::max(r.row0, 0), r1 = std::min(r.row1, cam.height - 1);
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      const Eigen::Vector3d dir((col - cam.c_x) / (cam.f * cam.s_x),
                                (row - cam.c_y) / (cam.f * cam.s_y), 1.0);
      const double t = ray_hit(shape, dir);
      if (t < img.at(row, col)) img.at(row, col) = t;
    }
  }
}

inline void rasterize(const PointSet& ps, DepthImage& img) {
  const CameraModel& cam = img.camera;
  for (const auto& p : ps.points) {
    if (!(p.z() > 0.0)) continue;
    const DepthPoint dp = project_to_depth(p, cam);
    const long col = std::lround(dp.p_x), row = std::lround(dp.p_y);
    if (col < 0 || row < 0 || col >= cam.width || row >= cam.height) continue;
    double& cell = img.at(static_cast<int>(row), static_cast<int>(col));
    if (dp.d < cell) cell = dp.d;
  }
}

}  // namespace detail

// Depth image of primitives given in arm-base coordinates. Pixel (col, row)
// samples the ray through integer pixel coordinates; the stored value is the
// z of the nearest hit. Point sets splat to their nearest pixel.
// `quantum` > 0 rounds depths to multiples of it.
inline DepthImage render_depth(const std::vector<Primitive>& scene, const CameraModel& cam,
                               double quantum = 0.0) {
  DepthImage img(cam);
  for (const Primitive& prim : scene) {
    std::visit([&](const auto& shape) { detail::rasterize(shape, img); },
               transformed(prim, cam.extrinsic));
  }
  if (quantum > 0.0) {
    for (double& d : img.depth)
      if (std::isfinite(d)) d = std::round(d / quantum) * quantum;
  }
  return img;
}

}  // namespace tpik
