#include "armstack/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace armstack::geometry {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

}  // namespace

Transform::Transform(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
    : rotation(canonical(q)), translation(t) {}

Transform Transform::translate(double x, double y, double z) {
  return Transform(Eigen::Quaterniond::Identity(), Eigen::Vector3d(x, y, z));
}

Transform Transform::rot_x(double angle) {
  return rot_axis(Eigen::Vector3d::UnitX(), angle);
}

Transform Transform::rot_y(double angle) {
  return rot_axis(Eigen::Vector3d::UnitY(), angle);
}

Transform Transform::rot_z(double angle) {
  return rot_axis(Eigen::Vector3d::UnitZ(), angle);
}

Transform Transform::rot_axis(const Eigen::Vector3d& axis, double angle) {
  return Transform(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())),
                   Eigen::Vector3d::Zero());
}

Transform Transform::from_rpy(double x, double y, double z,
                              double roll, double pitch, double yaw) {
  Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                         Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
  return Transform(q, Eigen::Vector3d(x, y, z));
}

Eigen::Vector3d Transform::apply(const Eigen::Vector3d& point) const {
  return rotation * point + translation;
}

Eigen::Matrix4d Transform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = rotation.toRotationMatrix();
  m.block<3, 1>(0, 3) = translation;
  return m;
}

Transform compose(const Transform& a, const Transform& b) {
  return Transform(a.rotation * b.rotation,
                   a.rotation * b.translation + a.translation);
}

Transform inverse(const Transform& t) {
  Eigen::Quaterniond q_inv = t.rotation.conjugate();
  return Transform(q_inv, q_inv * (-t.translation));
}

Transform object_in_base(const Transform& t_wb, const Transform& t_wo) {
  return compose(inverse(t_wb), t_wo);
}

Transform goal_from_camera(const Transform& t_bc, const Transform& t_co) {
  return compose(t_bc, t_co);
}

std::pair<double, double> pose_distance(const Transform& a, const Transform& b) {
  const double d_trans = (a.translation - b.translation).norm();
  const Eigen::Quaterniond q_rel = a.rotation.conjugate() * b.rotation;
  // atan2 form is stable near identity and maps q/-q to the same angle.
  const double angle =
      2.0 * std::atan2(q_rel.vec().norm(), std::abs(q_rel.w()));
  return {d_trans, angle};
}

Transform pose_from_fields(std::span<const double> fields) {
  if (fields.size() == 7) {
    Eigen::Quaterniond q(fields[3], fields[4], fields[5], fields[6]);
    if (q.norm() < 1e-9) {
      throw std::invalid_argument("pose quaternion has near-zero norm");
    }
    return Transform(q, Eigen::Vector3d(fields[0], fields[1], fields[2]));
  }
  if (fields.size() == 6) {
    return Transform::from_rpy(fields[0], fields[1], fields[2],
                               fields[3], fields[4], fields[5]);
  }
  throw std::invalid_argument("pose needs 6 (xyz+rpy) or 7 (xyz+quat) fields, got " +
                              std::to_string(fields.size()));
}

std::vector<double> pose_to_fields(const Transform& t) {
  return {t.translation.x(), t.translation.y(), t.translation.z(),
          t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()};
}

std::string format_pose(const Transform& t) {
  const std::vector<double> f = pose_to_fields(t);
  char buf[192];
  std::snprintf(buf, sizeof(buf), "[%.9g, %.9g, %.9g, %.9g, %.9g, %.9g, %.9g]",
                f[0], f[1], f[2], f[3], f[4], f[5], f[6]);
  return buf;
}

}  // namespace armstack::geometry
