#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "armstack/geometry.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::kinematics {

/// Tip twist and Jacobian use [angular; linear] row ordering, base frame.
using Jacobian = Eigen::Matrix<double, 6, kNumJoints>;

struct FkResult {
  // Frame of every link in the arm base frame; index matches ArmModel::links.
  std::vector<geometry::Transform> link_frames;
  // Frame of every joint (origin on the joint axis, z of rotation applied).
  std::vector<geometry::Transform> joint_frames;
  geometry::Transform tip;     // base -> tool tip
  geometry::Transform camera;  // base -> wrist camera
};

FkResult forward(const model::ArmModel& arm, const Joints& q);
geometry::Transform tip_pose(const model::ArmModel& arm, const Joints& q);

Jacobian tip_jacobian(const model::ArmModel& arm, const Joints& q);

/// Yoshikawa measure sqrt(det(J J^T)).
double manipulability(const Jacobian& j);
double manipulability(const model::ArmModel& arm, const Joints& q);

struct IkOptions {
  double pos_tol = 1e-3;            // m
  double rot_tol = deg_to_rad(0.5);  // rad
  // Total damped-least-squares iterations across all attempts. Derived from a
  // wall-clock budget at a fixed nominal rate so results stay reproducible.
  int iteration_budget = 2000;
  int max_restarts = 20;  // random restart attempts after the seeded one
  std::uint64_t seed = 0;  // rng stream for restarts

  static int budget_from_time(double seconds);
};

struct IkResult {
  bool success = false;
  Joints q = Joints::Zero();
  double pos_err = 0;  // m, at the returned q
  double rot_err = 0;  // rad
  int iterations = 0;  // total spent
  int restarts = 0;    // random restarts consumed
};

/// Solves tip_pose(arm, q) == target for q. The returned configuration is
/// always within joint limits. `q_seed` starts the first attempt; further
/// attempts start from uniform in-limit samples.
IkResult solve_ik(const model::ArmModel& arm,
                  const geometry::Transform& target, const Joints& q_seed,
                  const IkOptions& opts = {});

}  // namespace armstack::kinematics
