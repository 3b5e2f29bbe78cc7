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

#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "tpik/linalg.hpp"
#include "tpik/tasks.hpp"

namespace tpik {

struct SolverParams {
  double qdot_max = 1.5;  // rad/s, bound on |qdot|
  double epsilon_default = 0.05;
  // 0 means "number of set-based tasks + 1", enough to always reach a fixpoint.
  int max_active_set_iterations = 0;
  double singular_value_floor = kDefaultSingularValueFloor;
  // Dead band on J_A qdot when testing deactivation (task units per second).
  double deactivation_tolerance = 1e-3;

  void validate() const {
    if (!(qdot_max > 0.0)) throw std::invalid_argument("qdot_max must be positive");
    if (max_active_set_iterations < 0)
      throw std::invalid_argument("max_active_set_iterations must be >= 1 (or 0 for automatic)");
    if (!(singular_value_floor >= 0.0))
      throw std::invalid_argument("singular_value_floor must be non-negative");
    if (!(deactivation_tolerance >= 0.0))
      throw std::invalid_argument("deactivation_tolerance must be non-negative");
  }
};

// q_i = J^#(sigma_d_dot + K error) with J^# damped by lambda.
inline Eigen::VectorXd clik_velocity(const TaskEvaluation& e, const Eigen::VectorXd& gain,
                                     double lambda,
                                     double floor = kDefaultSingularValueFloor) {
  if (e.jacobian.rows() != e.sigma.size() || gain.size() != e.sigma.size() ||
      e.sigma_d.size() != e.sigma.size() || e.sigma_d_dot.size() != e.sigma.size())
    throw std::invalid_argument("task evaluation dimensions are inconsistent");
  const Eigen::VectorXd v = e.sigma_d_dot + gain.cwiseProduct(e.error());
  return dls_pseudoinverse(e.jacobian, lambda, floor) * v;
}

struct HierarchyLevel {
  TaskEvaluation eval;
  Eigen::VectorXd gain;
};

struct NsbResult {
  Eigen::VectorXd qdot;
  std::vector<double> lambda;     // per level
  std::vector<double> sigma_min;  // per level, of the level's own Jacobian
  bool saturated = false;
  double scale = 1.0;  // uniform factor applied by the saturation
};

// qdot = q_1 + N_1 q_2 + ... + N_{1,h-1} q_h, where N_{1,i} projects onto the
// null space of the Jacobians of levels 1..i stacked. Damping for level i
// comes from its own smallest singular value and error norm.
inline NsbResult nsb_solve(std::span<const HierarchyLevel> levels,
                           const SolverParams& params) {
  if (levels.empty()) throw std::invalid_argument("hierarchy must be non-empty");
  const Eigen::Index n = levels.front().eval.jacobian.cols();
  NsbResult out;
  out.qdot = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd stacked(0, n);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const HierarchyLevel& lvl = levels[i];
    if (lvl.eval.jacobian.cols() != n)
      throw std::invalid_argument("task Jacobians disagree on joint count");
    const double smin = min_singular_value(lvl.eval.jacobian);
    const double lambda = damping_factor(smin, lvl.eval.error().norm(), params.qdot_max);
    out.sigma_min.push_back(smin);
    out.lambda.push_back(lambda);
    const Eigen::VectorXd qi =
        clik_velocity(lvl.eval, lvl.gain, lambda, params.singular_value_floor);
    out.qdot.noalias() += proj * qi;
    if (i + 1 < levels.size()) {
      stacked.conservativeResize(stacked.rows() + lvl.eval.jacobian.rows(), Eigen::NoChange);
      stacked.bottomRows(lvl.eval.jacobian.rows()) = lvl.eval.jacobian;
      proj = null_projector(stacked, params.singular_value_floor);
    }
  }
  const double norm = out.qdot.norm();
  if (norm > params.qdot_max) {
    out.scale = params.qdot_max / norm;
    out.qdot *= out.scale;
    out.saturated = true;
  }
  return out;
}

// Measurement-backed input for one declared task.
struct TaskInput {
  TaskEvaluation eval;
  // No measurement (obstacle outside every surveillance region): sigma is
  // +inf and the task cannot activate.
  bool available = true;
  // Distance collapsed to zero; the tick becomes an emergency stop.
  bool degenerate = false;
  // Rate of sigma caused by the environment rather than the arm.
  double external_rate = 0.0;
};

struct SolverState {
  std::vector<bool> active;  // per declared task, from the previous tick
};

struct SolverOutput {
  Eigen::VectorXd qdot;
  std::vector<bool> active;        // per declared task (equality tasks: true)
  std::vector<double> lambda;      // per declared task, 0 when not in the hierarchy
  std::vector<double> sigma_min;   // per declared task, NaN when not in the hierarchy
  std::vector<double> error_norm;  // per declared task, |sigma_d - sigma| when solved
  bool emergency_stop = false;
  bool saturated = false;
  bool converged = true;
  int hierarchy_solves = 0;  // accepted hierarchies, at most (#set-based + 1)
  int probe_solves = 0;      // solves with one task removed, for deactivation checks
};

namespace detail {

inline NsbResult solve_subset(std::span<const TaskSpec> specs, std::span<const TaskInput> inputs,
                              const std::vector<bool>& included,
                              const std::vector<Eigen::VectorXd>& desired,
                              const SolverParams& params, Eigen::Index n) {
  std::vector<HierarchyLevel> levels;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!included[i]) continue;
    HierarchyLevel lvl{inputs[i].eval, specs[i].gain};
    if (specs[i].set_based()) lvl.eval.sigma_d = desired[i];
    levels.push_back(std::move(lvl));
  }
  if (levels.empty()) {
    NsbResult r;
    r.qdot = Eigen::VectorXd::Zero(n);
    return r;
  }
  return nsb_solve(levels, params);
}

}  // namespace detail

// One control tick of the set-based hierarchy:
//  1. every set-based task beyond an activation threshold becomes active with
//     the boundary value as its desired value;
//  2. the hierarchy of active tasks is solved;
//  3. active set-based tasks are visited in declared order; the first one the
//     solution without it would push back toward the valid set is
//     deactivated, and the loop returns to 2;
//  4. the result is a fixpoint only if every deactivated task still moves
//     back toward the valid set under the final velocity;
//  5. otherwise, or on reaching the iteration cap, the all-active solution
//     from the first pass is returned.
inline SolverOutput solve_tick(std::span<const TaskSpec> specs,
                               std::span<const TaskInput> inputs, SolverState& state,
                               const SolverParams& params) {
  if (specs.size() != inputs.size())
    throw std::invalid_argument("one input per declared task required");
  if (specs.empty()) throw std::invalid_argument("hierarchy must be non-empty");
  const std::size_t count = specs.size();
  const Eigen::Index n = inputs.front().eval.jacobian.cols();

  SolverOutput out;
  out.qdot = Eigen::VectorXd::Zero(n);
  out.active.assign(count, false);
  out.lambda.assign(count, 0.0);
  out.sigma_min.assign(count, std::numeric_limits<double>::quiet_NaN());
  out.error_norm.assign(count, 0.0);

  for (const TaskInput& in : inputs) {
    if (in.degenerate) {
      out.emergency_stop = true;
      state.active = out.active;
      return out;
    }
  }

  std::vector<bool> included(count, false);
  std::vector<Eigen::VectorXd> desired(count);
  int set_based = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!specs[i].set_based()) {
      included[i] = true;
      continue;
    }
    ++set_based;
    if (!inputs[i].available) continue;
    const double sigma = inputs[i].eval.sigma[0];
    if (auto d = set_based_desired(sigma, specs[i].thresholds)) {
      included[i] = true;
      desired[i] = Eigen::VectorXd::Constant(1, *d);
    }
  }

  const int max_iter = params.max_active_set_iterations > 0
                           ? params.max_active_set_iterations
                           : set_based + 1;
  const NsbResult all_active = detail::solve_subset(specs, inputs, included, desired, params, n);
  NsbResult current = all_active;
  out.hierarchy_solves = 1;
  bool fixpoint = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool removed = false;
    for (std::size_t i = 0; i < count && !removed; ++i) {
      if (!specs[i].set_based() || !included[i]) continue;
      std::vector<bool> without = included;
      without[i] = false;
      NsbResult probe = detail::solve_subset(specs, inputs, without, desired, params, n);
      ++out.probe_solves;
      if (may_deactivate(inputs[i].eval.sigma[0], inputs[i].eval.jacobian.row(0),
                         probe.qdot, specs[i].thresholds, params.deactivation_tolerance,
                         inputs[i].external_rate)) {
        included = std::move(without);
        current = std::move(probe);
        ++out.hierarchy_solves;
        removed = true;
      }
    }
    if (!removed) {
      fixpoint = true;
      break;
    }
  }
  // A later removal may undo the motion that justified an earlier one; such
  // an active set is not a fixpoint.
  for (std::size_t i = 0; fixpoint && i < count; ++i) {
    if (!specs[i].set_based() || included[i] || desired[i].size() != 1) continue;
    fixpoint = may_deactivate(inputs[i].eval.sigma[0], inputs[i].eval.jacobian.row(0),
                              current.qdot, specs[i].thresholds, params.deactivation_tolerance,
                              inputs[i].external_rate);
  }

  out.converged = fixpoint;
  if (!fixpoint) {
    // Safe fallback: every candidate stays active.
    included.assign(count, false);
    for (std::size_t i = 0; i < count; ++i)
      included[i] = !specs[i].set_based() || desired[i].size() == 1;
    current = all_active;
  }

  std::size_t level = 0;
  for (std::size_t i = 0; i < count; ++i) {
    out.active[i] = included[i];
    if (!included[i]) continue;
    if (level < current.lambda.size()) {
      out.lambda[i] = current.lambda[level];
      out.sigma_min[i] = current.sigma_min[level];
    }
    const Eigen::VectorXd err =
        (specs[i].set_based() ? desired[i] : inputs[i].eval.sigma_d) - inputs[i].eval.sigma;
    out.error_norm[i] = err.norm();
    ++level;
  }
  out.qdot = current.qdot;
  out.saturated = current.saturated;
  state.active = out.active;
  return out;
}

}  // namespace tpik
