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
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpik/errors.hpp"

namespace tpik {

// Pin-hole depth camera. Pixel (p_x, p_y) maps to the ray
// ((p_x - c_x) / (f s_x), (p_y - c_y) / (f s_y), 1) in the camera frame
// (z forward, x right, y down).
struct CameraModel {
  double f = 0.0036;     // m
  double s_x = 1.0e5;    // px/m
  double s_y = 1.0e5;    // px/m
  double c_x = 256.0;    // px
  double c_y = 212.0;    // px
  int width = 512;
  int height = 424;
  // Maps arm-base coordinates to camera coordinates.
  Eigen::Isometry3d extrinsic = Eigen::Isometry3d::Identity();

  double fx() const { return f * s_x; }
  double fy() const { return f * s_y; }

  bool operator==(const CameraModel& o) const {
    return f == o.f && s_x == o.s_x && s_y == o.s_y && c_x == o.c_x && c_y == o.c_y &&
           width == o.width && height == o.height &&
           extrinsic.matrix() == o.extrinsic.matrix();
  }

  void validate() const {
    if (!(f > 0.0 && s_x > 0.0 && s_y > 0.0))
      throw std::invalid_argument("focal length and pixel densities must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
    if (!(c_x >= 0.0 && c_x < width && c_y >= 0.0 && c_y < height))
      throw std::invalid_argument("principal point outside the image");
    const Eigen::Matrix3d r = extrinsic.linear();
    if (!(r * r.transpose()).isIdentity(1e-9) || std::abs(r.determinant() - 1.0) > 1e-9)
      throw std::invalid_argument("extrinsic rotation must be orthonormal with det +1");
  }

  // Camera at `eye` looking at `target`; `up` fixes the roll (image y points
  // away from it). All three in base coordinates.
  static Eigen::Isometry3d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ()) {
    const Eigen::Vector3d z = (target - eye).normalized();
    Eigen::Vector3d x = z.cross(up);
    if (x.norm() < 1e-9) x = z.unitOrthogonal();
    x.normalize();
    const Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix3d cam_in_base;
    cam_in_base << x, y, z;
    Eigen::Isometry3d base_to_cam = Eigen::Isometry3d::Identity();
    base_to_cam.linear() = cam_in_base.transpose();
    base_to_cam.translation() = -cam_in_base.transpose() * eye;
    return base_to_cam;
  }
};

// Point in depth space: pixel coordinates plus depth along the optical axis.
struct DepthPoint {
  double p_x = 0.0;
  double p_y = 0.0;
  double d = 1.0;
};

inline Eigen::Vector3d depth_to_cartesian(const DepthPoint& pd, const CameraModel& cam) {
  return {(pd.p_x - cam.c_x) * pd.d / (cam.f * cam.s_x),
          (pd.p_y - cam.c_y) * pd.d / (cam.f * cam.s_y), pd.d};
}

inline DepthPoint project_to_depth(const Eigen::Vector3d& p, const CameraModel& cam) {
  if (!(p.z() > 0.0)) throw BehindCameraError("point is not in front of the camera");
  return {cam.c_x + cam.f * cam.s_x * (p.x() / p.z()),
          cam.c_y + cam.f * cam.s_y * (p.y() / p.z()), p.z()};
}

// V = O - P in camera coordinates, computed directly from depth space.
inline Eigen::Vector3d distance_vector(const DepthPoint& pd, const DepthPoint& od,
                                       const CameraModel& cam) {
  return {((od.p_x - cam.c_x) * od.d - (pd.p_x - cam.c_x) * pd.d) / (cam.f * cam.s_x),
          ((od.p_y - cam.c_y) * od.d - (pd.p_y - cam.c_y) * pd.d) / (cam.f * cam.s_y),
          od.d - pd.d};
}

// Row-major depth grid in metres; +inf marks pixels without a return.
struct DepthImage {
  CameraModel camera;
  std::vector<double> depth;

  DepthImage() = default;
  explicit DepthImage(const CameraModel& cam)
      : camera(cam),
        depth(static_cast<std::size_t>(cam.width) * cam.height,
              std::numeric_limits<double>::infinity()) {}

  int width() const { return camera.width; }
  int height() const { return camera.height; }
  double& at(int row, int col) { return depth[static_cast<std::size_t>(row) * width() + col]; }
  double at(int row, int col) const {
    return depth[static_cast<std::size_t>(row) * width() + col];
  }

  std::size_t finite_count() const {
    return static_cast<std::size_t>(
        std::count_if(depth.begin(), depth.end(), [](double d) { return std::isfinite(d); }));
  }

  bool operator==(const DepthImage& o) const = default;
};

// Binary 16-bit greymap, one unit per millimetre, 0 for no return. The
// header carries the scale as a comment.
inline void write_depth_pgm(const DepthImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  constexpr double kScale = 0.001;
  out << "P5\n# depth_scale_m " << kScale << " (0 = no return)\n"
      << img.width() << " " << img.height() << "\n65535\n";
  for (double d : img.depth) {
    std::uint16_t v = 0;
    if (std::isfinite(d)) v = static_cast<std::uint16_t>(std::clamp(std::lround(d / kScale), 1L, 65535L));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace tpik
