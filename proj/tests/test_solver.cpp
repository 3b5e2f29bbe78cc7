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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "support.hpp"

using namespace tpik;
using tpik::test::Rng;

namespace {

// Normal-equation forms, independent of the SVD paths under test.
Eigen::MatrixXd right_inverse(const Eigen::MatrixXd& j) {
  return j.transpose() * (j * j.transpose()).inverse();
}

Eigen::MatrixXd projector_of(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  return Eigen::MatrixXd::Identity(n, n) - right_inverse(a) * a;
}

TaskEvaluation linear_task(const Eigen::MatrixXd& j, const Eigen::VectorXd& sigma,
                           const Eigen::VectorXd& sigma_d) {
  TaskEvaluation e;
  e.jacobian = j;
  e.sigma = sigma;
  e.sigma_d = sigma_d;
  e.sigma_d_dot = Eigen::VectorXd::Zero(sigma.size());
  return e;
}

TaskSpec joint_limit_spec(int joint) {
  TaskSpec s;
  s.name = "jl" + std::to_string(joint);
  s.kind = JointLimitTask{joint};
  s.mode = TaskMode::set_based;
  s.thresholds = SetBasedThresholds::both(-2.0, -1.8, 1.8, 2.0);
  s.gain = Eigen::VectorXd::Constant(1, 1.0);
  s.group = PriorityGroup::safety;
  return s;
}

TaskSpec equality_spec(int dim, double gain) {
  TaskSpec s;
  s.name = "goal";
  s.kind = EePositionTask{};
  s.gain = Eigen::VectorXd::Constant(dim, gain);
  return s;
}

TaskInput joint_input(const Eigen::VectorXd& q, int joint) {
  return TaskInput{eval_joint_limit(q, joint)};
}

}  // namespace

TEST_CASE("pseudoinverse", "[solver]") {
  CHECK(pseudoinverse(Eigen::Matrix3d::Identity()).isApprox(Eigen::Matrix3d::Identity()));

  Eigen::MatrixXd row(1, 3);
  row << 2, 0, 0;
  CHECK(pseudoinverse(row).isApprox(Eigen::Vector3d(0.5, 0, 0)));

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd j = rng.matrix(3, 7);
    const Eigen::MatrixXd p = pseudoinverse(j);
    CHECK((j * p * j - j).norm() < 1e-9);
    CHECK((p * j * p - p).norm() < 1e-9);
    CHECK(((j * p).transpose() - j * p).norm() < 1e-9);
    CHECK(((p * j).transpose() - p * j).norm() < 1e-9);
    CHECK((p - right_inverse(j)).norm() < 1e-8);
  }

  Eigen::MatrixXd rank1(2, 3);
  rank1 << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS_AS(pseudoinverse(rank1), RankDeficientError);
}

TEST_CASE("damped least-squares inverse", "[solver]") {
  CHECK(dls_pseudoinverse(Eigen::Matrix2d::Identity(), 1.0).isApprox(0.5 * Eigen::Matrix2d::Identity()));

  Eigen::MatrixXd row(1, 2);
  row << 1, 0;
  CHECK(dls_pseudoinverse(row, 1.0).isApprox(Eigen::Vector2d(0.5, 0)));

  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd j = rng.matrix(3, 7);
    CHECK((dls_pseudoinverse(j, 0.0) - right_inverse(j)).norm() < 1e-8);

    const double lambda = rng.uniform(0.01, 1.0);
    const Eigen::MatrixXd closed =
        j.transpose() *
        (j * j.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(3, 3)).inverse();
    const Eigen::MatrixXd d = dls_pseudoinverse(j, lambda);
    CHECK((d - closed).norm() < 1e-9);

    const double spectral = Eigen::JacobiSVD<Eigen::MatrixXd>(d).singularValues()[0];
    CHECK(spectral <= 1.0 / (2.0 * lambda) + 1e-12);
  }

  Eigen::MatrixXd singular(2, 2);
  singular << 1, 1, 1, 1;
  CHECK(dls_pseudoinverse(singular, 0.0).allFinite());
  CHECK(dls_pseudoinverse(singular, 0.1).allFinite());
}

TEST_CASE("damping schedule", "[solver]") {
  // sigma* = 0.15 / 1.5 = 0.1
  CHECK(damping_factor(0.2, 0.15, 1.5) == 0.0);
  CHECK(damping_factor(0.1, 0.15, 1.5) == 0.0);
  CHECK(damping_factor(0.06, 0.15, 1.5) == Catch::Approx(0.0489898).epsilon(1e-5));
  CHECK(damping_factor(0.01, 0.15, 1.5) == Catch::Approx(0.05));

  // continuous at both breakpoints
  CHECK(damping_factor(0.1 - 1e-12, 0.15, 1.5) < 1e-5);
  CHECK(damping_factor(0.05, 0.15, 1.5) == Catch::Approx(0.05));
  CHECK(damping_factor(0.05 - 1e-12, 0.15, 1.5) == Catch::Approx(0.05));

  CHECK(min_singular_value(Eigen::Matrix2d(Eigen::Vector2d(3, 0.5).asDiagonal())) ==
        Catch::Approx(0.5));
}

TEST_CASE("closed-loop task velocity", "[solver]") {
  const TaskEvaluation e =
      linear_task(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), Eigen::Vector3d(0.1, -0.2, 0.3));
  CHECK(clik_velocity(e, Eigen::Vector3d::Ones(), 0.0).isApprox(Eigen::Vector3d(0.1, -0.2, 0.3)));
  CHECK(clik_velocity(e, Eigen::Vector3d::Constant(2.0), 0.0)
            .isApprox(Eigen::Vector3d(0.2, -0.4, 0.6)));

  TaskEvaluation ff = e;
  ff.sigma_d = ff.sigma;
  ff.sigma_d_dot = Eigen::Vector3d(1, 0, 0);
  CHECK(clik_velocity(ff, Eigen::Vector3d::Ones(), 0.0).isApprox(Eigen::Vector3d(1, 0, 0)));

  TaskEvaluation bad = e;
  bad.sigma_d = Eigen::Vector2d::Zero();
  CHECK_THROWS_AS(clik_velocity(bad, Eigen::Vector3d::Ones(), 0.0), std::invalid_argument);
}

TEST_CASE("null-space projector", "[solver]") {
  CHECK(null_projector(Eigen::Matrix3d::Identity()).norm() < 1e-12);

  Eigen::MatrixXd row(1, 3);
  row << 1, 0, 0;
  CHECK(null_projector(row).isApprox(Eigen::Vector3d(0, 1, 1).asDiagonal().toDenseMatrix()));
  CHECK(null_projector(Eigen::MatrixXd(0, 4)).isApprox(Eigen::Matrix4d::Identity()));

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd j = rng.matrix(4, 7);
    const Eigen::MatrixXd n = null_projector(j);
    CHECK((n * n - n).norm() < 1e-9);
    CHECK((n.transpose() - n).norm() < 1e-9);
    CHECK((j * n).norm() < 1e-9);
    CHECK((n - projector_of(j)).norm() < 1e-8);
  }

  // A repeated row leaves the rank unchanged.
  Eigen::MatrixXd dup(2, 3);
  dup << 1, 2, 3, 1, 2, 3;
  const Eigen::MatrixXd n = null_projector(dup);
  CHECK((n * n - n).norm() < 1e-12);
  CHECK(n.trace() == Catch::Approx(2.0));
}

TEST_CASE("null-space-based composition", "[solver]") {
  SolverParams params;
  params.qdot_max = 1e3;

  SECTION("single square task") {
    const Eigen::Vector3d target(0.1, 0.2, -0.1);
    const std::vector<HierarchyLevel> lv{
        {linear_task(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), target),
         Eigen::Vector3d::Ones()}};
    const NsbResult r = nsb_solve(lv, params);
    CHECK(r.qdot.isApprox(target));
    CHECK_FALSE(r.saturated);
    CHECK(r.lambda[0] == 0.0);
  }

  SECTION("orthogonal tasks do not interfere") {
    Eigen::MatrixXd j1(1, 2), j2(1, 2);
    j1 << 1, 0;
    j2 << 0, 1;
    const std::vector<HierarchyLevel> lv{
        {linear_task(j1, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.3)),
         Eigen::VectorXd::Ones(1)},
        {linear_task(j2, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, -0.2)),
         Eigen::VectorXd::Ones(1)}};
    CHECK(nsb_solve(lv, params).qdot.isApprox(Eigen::Vector2d(0.3, -0.2)));
  }

  SECTION("conflicting tasks: the higher priority wins") {
    Rng rng(14);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::MatrixXd j1 = rng.matrix(2, 3);
      const Eigen::MatrixXd j2 = rng.matrix(2, 3);
      const Eigen::VectorXd v1 = 0.1 * rng.vector(2);
      const Eigen::VectorXd v2 = 0.1 * rng.vector(2);
      const std::vector<HierarchyLevel> lv{
          {linear_task(j1, Eigen::VectorXd::Zero(2), v1), Eigen::VectorXd::Ones(2)},
          {linear_task(j2, Eigen::VectorXd::Zero(2), v2), Eigen::VectorXd::Ones(2)}};
      const NsbResult r = nsb_solve(lv, params);
      if (r.lambda[0] != 0.0 || r.lambda[1] != 0.0) continue;
      const Eigen::VectorXd expected =
          right_inverse(j1) * v1 + projector_of(j1) * right_inverse(j2) * v2;
      CHECK((r.qdot - expected).norm() < 1e-8);
      CHECK((j1 * r.qdot - v1).norm() < 1e-8);
    }
  }

  SECTION("three levels follow the composition") {
    Rng rng(15);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<Eigen::MatrixXd> j;
      std::vector<Eigen::VectorXd> v;
      std::vector<HierarchyLevel> lv;
      for (int i = 0; i < 3; ++i) {
        j.push_back(rng.matrix(2, 7));
        v.push_back(0.1 * rng.vector(2));
        lv.push_back({linear_task(j[i], Eigen::VectorXd::Zero(2), v[i]), Eigen::VectorXd::Ones(2)});
      }
      const NsbResult r = nsb_solve(lv, params);
      if (r.lambda[0] != 0.0 || r.lambda[1] != 0.0 || r.lambda[2] != 0.0) continue;
      Eigen::MatrixXd j12(4, 7);
      j12 << j[0], j[1];
      const Eigen::VectorXd expected = right_inverse(j[0]) * v[0] +
                                       projector_of(j[0]) * right_inverse(j[1]) * v[1] +
                                       projector_of(j12) * right_inverse(j[2]) * v[2];
      CHECK((r.qdot - expected).norm() < 1e-8);
      CHECK((j[0] * r.qdot - v[0]).norm() < 1e-8);
    }
  }

  SECTION("saturation scales uniformly") {
    SolverParams tight;
    tight.qdot_max = 1.5;
    const Eigen::Vector3d target(3, -4, 0);
    const std::vector<HierarchyLevel> lv{
        {linear_task(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), target),
         Eigen::Vector3d::Constant(10.0)}};
    const NsbResult r = nsb_solve(lv, tight);
    CHECK(r.saturated);
    CHECK(r.qdot.norm() == Catch::Approx(1.5));
    CHECK(r.qdot.normalized().isApprox(target.normalized()));
  }

  CHECK_THROWS_AS(nsb_solve(std::vector<HierarchyLevel>{}, params), std::invalid_argument);
}

TEST_CASE("set-based tick", "[solver]") {
  SolverParams params;
  params.qdot_max = 1e3;
  const std::vector<TaskSpec> specs{joint_limit_spec(1), equality_spec(2, 0.8)};

  auto inputs_for = [](const Eigen::Vector2d& q, const Eigen::Vector2d& target) {
    return std::vector<TaskInput>{
        joint_input(q, 1), TaskInput{linear_task(Eigen::Matrix2d::Identity(), q, target)}};
  };

  SECTION("inside the band the set-based task stays out") {
    const Eigen::Vector2d q(0.5, 0.0), target(1.0, 1.0);
    SolverState st;
    const SolverOutput out = solve_tick(specs, inputs_for(q, target), st, params);
    CHECK_FALSE(out.active[0]);
    CHECK(out.active[1]);
    CHECK(out.qdot.isApprox(0.8 * (target - q)));
    CHECK(std::isnan(out.sigma_min[0]));
    CHECK(out.hierarchy_solves == 1);
  }

  SECTION("a goal beyond the limit keeps the task active") {
    const Eigen::Vector2d q(1.85, 0.0), target(2.5, 0.5);
    SolverState st;
    const SolverOutput out = solve_tick(specs, inputs_for(q, target), st, params);
    CHECK(out.active[0]);
    CHECK(out.converged);
    // joint 1 driven to su, the goal acts only on joint 2
    CHECK(out.qdot.isApprox(Eigen::Vector2d(1.8 - 1.85, 0.8 * 0.5)));
    CHECK(out.error_norm[0] == Catch::Approx(0.05));
    CHECK(st.active == out.active);
  }

  SECTION("a goal back inside releases the task") {
    const Eigen::Vector2d q(1.85, 0.0), target(0.0, 0.5);
    SolverState st;
    const SolverOutput out = solve_tick(specs, inputs_for(q, target), st, params);
    CHECK_FALSE(out.active[0]);
    CHECK(out.converged);
    CHECK(out.qdot.isApprox(0.8 * (target - q)));
    CHECK(out.hierarchy_solves == 2);
  }

  SECTION("an unavailable measurement never activates") {
    const Eigen::Vector2d q(1.85, 0.0), target(2.5, 0.5);
    auto in = inputs_for(q, target);
    in[0].available = false;
    SolverState st;
    CHECK_FALSE(solve_tick(specs, in, st, params).active[0]);
  }

  SECTION("a degenerate distance stops the arm") {
    auto in = inputs_for(Eigen::Vector2d(0.3, 0.1), Eigen::Vector2d(1, 1));
    in[0].degenerate = true;
    SolverState st;
    const SolverOutput out = solve_tick(specs, in, st, params);
    CHECK(out.emergency_stop);
    CHECK(out.qdot.isZero());
  }

  SolverState st;
  CHECK_THROWS_AS(solve_tick(specs, std::vector<TaskInput>{}, st, params), std::invalid_argument);
}

TEST_CASE("active-set fixpoint against brute force", "[solver]") {
  // Three joints, limits on joints 1 and 2, one scalar goal below them.
  SolverParams params;
  params.qdot_max = 1e3;
  const std::vector<TaskSpec> specs{joint_limit_spec(1), joint_limit_spec(2),
                                    equality_spec(1, 0.8)};
  Rng rng(16);
  int released = 0, held = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::Vector3d q = 1.7 * rng.vector(3);
    for (int k = 0; k < 2; ++k)
      if (rng.uniform(0, 1) < 0.7) q[k] = (rng.uniform(0, 1) < 0.5 ? 1.0 : -1.0) * rng.uniform(1.76, 1.95);
    const Eigen::MatrixXd row = rng.matrix(1, 3);
    const Eigen::VectorXd sigma = row * q;
    const Eigen::VectorXd target = sigma + 0.5 * rng.vector(1);
    const std::vector<TaskInput> in{joint_input(q, 1), joint_input(q, 2),
                                    TaskInput{linear_task(row, sigma, target)}};
    SolverState st;
    const SolverOutput out = solve_tick(specs, in, st, params);
    REQUIRE_FALSE(out.emergency_stop);

    // Oracle: normal-equation composition of whichever tasks are included.
    auto compose = [&](const std::vector<bool>& inc) {
      Eigen::VectorXd qd = Eigen::VectorXd::Zero(3);
      Eigen::MatrixXd stacked(0, 3);
      for (int i = 0; i < 3; ++i) {
        if (!inc[i]) continue;
        const Eigen::MatrixXd& j = in[i].eval.jacobian;
        const double goal = i < 2 ? *set_based_desired(q[i], specs[i].thresholds) : target[0];
        const Eigen::VectorXd v = specs[i].gain * (goal - in[i].eval.sigma[0]);
        qd += projector_of(stacked) * right_inverse(j) * v;
        stacked.conservativeResize(stacked.rows() + 1, Eigen::NoChange);
        stacked.bottomRows(1) = j;
      }
      return qd;
    };

    std::vector<bool> candidate{beyond_activation(q[0], specs[0].thresholds),
                                beyond_activation(q[1], specs[1].thresholds), true};
    const std::vector<bool> result(out.active.begin(), out.active.end());
    for (int i = 0; i < 2; ++i)
      if (!candidate[i]) CHECK_FALSE(result[i]);
    if (std::any_of(out.lambda.begin(), out.lambda.end(), [](double l) { return l != 0.0; }))
      continue;

    const Eigen::VectorXd expected = compose(result);
    CHECK((out.qdot - expected).norm() < 1e-8);
    CHECK(out.hierarchy_solves <= 3);

    if (!out.converged) {
      CHECK(result == candidate);
      continue;
    }
    // Released tasks move back inside under the final velocity; kept tasks
    // would be pushed outward (or not moved) without themselves.
    for (int i = 0; i < 2; ++i) {
      if (!candidate[i]) continue;
      const double rate = out.qdot[i];
      if (!result[i]) {
        ++released;
        CHECK(may_deactivate(q[i], in[i].eval.jacobian.row(0), out.qdot, specs[i].thresholds,
                             params.deactivation_tolerance));
        CHECK(std::abs(rate) > params.deactivation_tolerance);
      } else {
        ++held;
        std::vector<bool> without = result;
        without[i] = false;
        CHECK_FALSE(may_deactivate(q[i], in[i].eval.jacobian.row(0), compose(without),
                                   specs[i].thresholds, params.deactivation_tolerance));
      }
    }
  }
  CHECK(released > 20);
  CHECK(held > 20);
}

TEST_CASE("solve count stays bounded", "[solver]") {
  const ArmModel m = default_arm();
  SolverParams params;
  std::vector<TaskSpec> specs;
  for (int j = 1; j <= 7; ++j) specs.push_back(joint_limit_spec(j));
  specs.push_back(equality_spec(3, 0.8));
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    JointVector q = 1.95 * rng.vector(7);
    std::vector<TaskInput> in;
    for (int j = 1; j <= 7; ++j) in.push_back(joint_input(q, j));
    in.push_back(TaskInput{eval_ee_position(m, q, rng.point(-0.6, 0.6))});
    SolverState st;
    const SolverOutput out = solve_tick(specs, in, st, params);
    CHECK(out.hierarchy_solves <= 8);
    CHECK(out.qdot.norm() <= params.qdot_max + 1e-12);
    CHECK(out.qdot.allFinite());
  }
}

TEST_CASE("solver parameter validation", "[solver]") {
  SolverParams p;
  CHECK_NOTHROW(p.validate());
  p.qdot_max = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SolverParams{};
  p.deactivation_tolerance = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SolverParams{};
  p.max_active_set_iterations = -1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
