#include "armstack/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace armstack::kinematics {

using geometry::Transform;
using Eigen::Vector3d;

FkResult forward(const model::ArmModel& arm, const Joints& q) {
  FkResult out;
  out.link_frames.reserve(arm.links.size());
  out.joint_frames.reserve(arm.joints.size());
  out.link_frames.push_back(Transform::identity());
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& j = arm.joints[i];
    Transform joint_base = geometry::compose(out.link_frames.back(), j.origin);
    Transform moved =
        geometry::compose(joint_base, Transform::rot_axis(j.axis, q[i]));
    out.joint_frames.push_back(joint_base);
    out.link_frames.push_back(moved);
  }
  out.tip = geometry::compose(out.link_frames.back(), arm.tip_offset);
  out.camera = geometry::compose(out.link_frames.back(), arm.camera_offset);
  return out;
}

geometry::Transform tip_pose(const model::ArmModel& arm, const Joints& q) {
  return forward(arm, q).tip;
}

Jacobian tip_jacobian(const model::ArmModel& arm, const Joints& q) {
  const FkResult fk = forward(arm, q);
  const Vector3d p_tip = fk.tip.translation;
  Jacobian j;
  for (int i = 0; i < kNumJoints; ++i) {
    const Vector3d axis =
        fk.joint_frames[i].rotation * arm.joints[i].axis;
    const Vector3d origin = fk.joint_frames[i].translation;
    j.block<3, 1>(0, i) = axis;
    j.block<3, 1>(3, i) = axis.cross(p_tip - origin);
  }
  return j;
}

double manipulability(const Jacobian& j) {
  return std::sqrt(std::max(0.0, (j * j.transpose()).determinant()));
}

double manipulability(const model::ArmModel& arm, const Joints& q) {
  return manipulability(tip_jacobian(arm, q));
}

int IkOptions::budget_from_time(double seconds) {
  // 40k damped-least-squares iterations per second is comfortably below what
  // this solver does on any recent machine, so a budget derived this way
  // finishes inside the wall-clock allowance it stands in for.
  return std::max(50, static_cast<int>(seconds * 40000.0));
}

namespace {

// Rotation part of the task-space error as an axis-angle vector, base frame.
Vector3d rotation_error(const Eigen::Quaterniond& target,
                        const Eigen::Quaterniond& current) {
  Eigen::Quaterniond q_rel = target * current.conjugate();
  if (q_rel.w() < 0) q_rel.coeffs() = -q_rel.coeffs();
  const double sin_half = q_rel.vec().norm();
  const double angle = 2.0 * std::atan2(sin_half, q_rel.w());
  if (sin_half < 1e-12) return Vector3d::Zero();
  return q_rel.vec() / sin_half * angle;
}

}  // namespace

IkResult solve_ik(const model::ArmModel& arm, const Transform& target,
                  const Joints& q_seed, const IkOptions& opts) {
  IkResult best;
  best.q = model::clamp_to_limits(arm, q_seed);
  best.pos_err = std::numeric_limits<double>::infinity();
  best.rot_err = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(opts.seed);
  const int per_attempt = 100;
  int spent = 0;
  double best_cost = std::numeric_limits<double>::infinity();

  for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
    Joints q;
    if (attempt == 0) {
      q = model::clamp_to_limits(arm, q_seed);
    } else {
      for (int i = 0; i < kNumJoints; ++i) {
        std::uniform_real_distribution<double> dist(arm.joints[i].limit_lo,
                                                    arm.joints[i].limit_hi);
        q[i] = dist(rng);
      }
      ++best.restarts;
    }

    for (int it = 0; it < per_attempt && spent < opts.iteration_budget; ++it) {
      ++spent;
      const Transform tip = tip_pose(arm, q);
      const Vector3d e_pos = target.translation - tip.translation;
      const Vector3d e_rot = rotation_error(target.rotation, tip.rotation);
      const double pos_err = e_pos.norm();
      const double rot_err = e_rot.norm();

      const double cost = pos_err + 0.25 * rot_err;
      if (cost < best_cost) {
        best_cost = cost;
        best.q = q;
        best.pos_err = pos_err;
        best.rot_err = rot_err;
      }
      if (pos_err < opts.pos_tol && rot_err < opts.rot_tol) {
        best.success = true;
        best.q = q;
        best.pos_err = pos_err;
        best.rot_err = rot_err;
        best.iterations = spent;
        return best;
      }

      Eigen::Matrix<double, 6, 1> e;
      e.head<3>() = e_rot;
      e.tail<3>() = e_pos;

      const Jacobian j = tip_jacobian(arm, q);
      const double lambda = 1e-3 + 0.1 * std::min(1.0, e.norm());
      Eigen::Matrix<double, 6, 6> jjt = j * j.transpose();
      jjt.diagonal().array() += lambda * lambda;
      Joints dq = j.transpose() * jjt.ldlt().solve(e);

      const double max_step = dq.cwiseAbs().maxCoeff();
      if (max_step > 0.2) dq *= 0.2 / max_step;
      q = model::clamp_to_limits(arm, q + dq);
    }
    if (spent >= opts.iteration_budget) break;
  }
  best.iterations = spent;
  return best;
}

}  // namespace armstack::kinematics
