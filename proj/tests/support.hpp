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
#include <functional>
#include <numbers>
#include <random>

#include "tpik/tpik.hpp"

namespace tpik::test {

// Two unit links in the base x-y plane.
inline ArmModel planar_2r() {
  ArmModel m;
  m.joints = {{1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}};
  m.joint_limits = {{-std::numbers::pi, std::numbers::pi}, {-std::numbers::pi, std::numbers::pi}};
  return m;
}

inline ArmModel one_link(double length) {
  ArmModel m;
  m.joints = {{length, 0.0, 0.0, 0.0}};
  m.joint_limits = {{-std::numbers::pi, std::numbers::pi}};
  return m;
}

class Rng {
 public:
  explicit Rng(unsigned seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(-1.0, 1.0);
    return m;
  }

  Eigen::VectorXd vector(Eigen::Index n) { return matrix(n, 1); }

  Eigen::Vector3d point(double lo, double hi) {
    return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
  }

  Eigen::VectorXd unit(Eigen::Index n) { return vector(n).normalized(); }

  // Configuration strictly inside the joint limits of `model`.
  JointVector configuration(const ArmModel& model, double shrink = 0.9) {
    JointVector q(model.dof());
    for (int i = 0; i < model.dof(); ++i)
      q[i] = shrink * uniform(model.joint_limits[i].min, model.joint_limits[i].max);
    return q;
  }

  std::mt19937& engine() { return gen_; }

 private:
  std::mt19937 gen_;
};

// Central-difference Jacobian of a vector-valued function of q.
inline Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const JointVector&)>& f, const JointVector& q,
    double h = 1e-6) {
  const Eigen::VectorXd f0 = f(q);
  Eigen::MatrixXd j(f0.size(), q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    JointVector qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    j.col(i) = (f(qp) - f(qm)) / (2.0 * h);
  }
  return j;
}

// Homogeneous DH transform written out entry by entry.
inline Eigen::Matrix4d dh_matrix(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0.0, sa, ca, d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

}  // namespace tpik::test
