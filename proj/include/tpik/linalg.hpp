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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

#include "tpik/errors.hpp"

namespace tpik {

inline constexpr double kDefaultSingularValueFloor = 1e-8;
inline constexpr double kMaxGramCondition = 1e12;

// Right pseudoinverse J^T (J J^T)^-1 of a full-row-rank matrix.
inline Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& j) {
  const Eigen::MatrixXd gram = j * j.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxGramCondition)
    throw RankDeficientError("J J^T is singular (eigenvalues " + std::to_string(lo) +
                             " .. " + std::to_string(hi) + ")");
  return j.transpose() * gram.ldlt().solve(Eigen::MatrixXd::Identity(j.rows(), j.rows()));
}

// J^T (J J^T + lambda^2 I)^-1, evaluated through the SVD as
// V diag(s / (s^2 + lambda^2)) U^T. With lambda = 0 the directions whose
// singular value is below `floor` are dropped instead of inverted.
inline Eigen::MatrixXd dls_pseudoinverse(const Eigen::MatrixXd& j, double lambda,
                                         double floor = kDefaultSingularValueFloor) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double l2 = lambda * lambda;
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (l2 > 0.0)
      inv[i] = s[i] / (s[i] * s[i] + l2);
    else
      inv[i] = s[i] > floor ? 1.0 / s[i] : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Smallest of the min(m, n) singular values.
inline double min_singular_value(const Eigen::MatrixXd& j) {
  if (j.size() == 0) return 0.0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  return svd.singularValues().minCoeff();
}

// Damping schedule driven by the smallest singular value and the threshold
// sigma* = |error| / qdot_max:
//   0                                  sigma_min >= sigma*
//   sqrt(sigma_min (sigma* - sigma_min))  sigma*/2 <= sigma_min < sigma*
//   sigma* / 2                         sigma_min < sigma*/2
inline double damping_factor(double sigma_min, double error_norm, double qdot_max) {
  const double star = error_norm / qdot_max;
  if (sigma_min >= star) return 0.0;
  if (sigma_min >= star / 2.0) return std::sqrt(sigma_min * (star - sigma_min));
  return star / 2.0;
}

// I - J^+ J, with J^+ the rank-revealing pseudoinverse (singular values at or
// below `floor` count as zero). Always an orthogonal projector.
inline Eigen::MatrixXd null_projector(const Eigen::MatrixXd& j_aug,
                                      double floor = kDefaultSingularValueFloor) {
  const Eigen::Index n = j_aug.cols();
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n);
  if (j_aug.rows() == 0) return proj;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j_aug, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] <= floor) break;  // sorted descending
    const Eigen::VectorXd v = svd.matrixV().col(i);
    proj.noalias() -= v * v.transpose();
  }
  return proj;
}

}  // namespace tpik
