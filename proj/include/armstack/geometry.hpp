#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace armstack::geometry {

/// Rigid-body transform in SE(3), stored as unit quaternion + translation.
/// The quaternion is renormalized and sign-canonicalized (w >= 0) on every
/// construction and composition so long kinematic chains do not drift.
struct Transform {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Transform() = default;
  Transform(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);

  static Transform identity() { return Transform{}; }
  static Transform translate(double x, double y, double z);
  static Transform rot_x(double angle);
  static Transform rot_y(double angle);
  static Transform rot_z(double angle);
  static Transform rot_axis(const Eigen::Vector3d& axis, double angle);
  /// Translation + roll/pitch/yaw, composed as Rz(yaw)*Ry(pitch)*Rx(roll).
  static Transform from_rpy(double x, double y, double z,
                            double roll, double pitch, double yaw);

  Eigen::Vector3d apply(const Eigen::Vector3d& point) const;
  Eigen::Matrix4d matrix() const;
};

/// Spatial velocity split into angular (rad/s) and linear (m/s) parts.
struct Twist {
  Eigen::Vector3d angular{0.0, 0.0, 0.0};
  Eigen::Vector3d linear{0.0, 0.0, 0.0};
};

/// Frame-chain composition: the frame described by b, expressed through a.
Transform compose(const Transform& a, const Transform& b);

Transform inverse(const Transform& t);

/// Object pose in the arm base frame given world->base and world->object.
Transform object_in_base(const Transform& t_wb, const Transform& t_wo);

/// Goal pose in the base frame given base->camera and camera->object.
Transform goal_from_camera(const Transform& t_bc, const Transform& t_co);

/// (translation distance in meters, relative rotation angle in [0, pi]).
/// q and -q describe the same rotation and yield zero angle.
std::pair<double, double> pose_distance(const Transform& a, const Transform& b);

/// Pose from the textual notation used by all file formats:
/// 7 fields [x, y, z, qw, qx, qy, qz] or 6 fields [x, y, z, roll, pitch, yaw]
/// (radians), disambiguated by field count. Throws std::invalid_argument on
/// any other length or a near-zero quaternion.
Transform pose_from_fields(std::span<const double> fields);

/// Seven-field form of the pose, canonical quaternion sign.
std::vector<double> pose_to_fields(const Transform& t);

std::string format_pose(const Transform& t);

}  // namespace armstack::geometry
