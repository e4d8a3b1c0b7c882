#pragma once

#include <Eigen/Core>

#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::dynamics {

inline constexpr double kGravity = 9.81;  // m/s^2

struct DynamicsInput {
  Joints q = Joints::Zero();
  Joints qdot = Joints::Zero();
  Joints qddot = Joints::Zero();
  double payload_mass = 0;  // kg, point mass rigidly attached at the tool tip
  // Gravity acceleration expressed in the arm base frame. Mounted arms pass
  // the rotated world gravity here.
  Eigen::Vector3d gravity{0, 0, -kGravity};
};

/// Joint torques the actuators must apply to realize the given motion state.
Joints inverse_dynamics(const model::ArmModel& arm, const DynamicsInput& in);

/// Static holding torques (qdot = qddot = 0).
Joints gravity_torques(const model::ArmModel& arm, const Joints& q,
                       double payload_mass = 0,
                       const Eigen::Vector3d& gravity = {0, 0, -kGravity});

/// Worst joint utilization: max over joints of |tau_i| / tau_max_i.
double torque_margin(const model::ArmModel& arm, const Joints& torques);

}  // namespace armstack::dynamics
