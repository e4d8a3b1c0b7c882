#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "armstack/model.hpp"

namespace armstack::model {
namespace {

using geometry::Transform;
using Eigen::Matrix3d;
using Eigen::Vector3d;

// Inertia of a solid primitive about its own centroid, local frame.
Matrix3d sphere_inertia(double mass, double r) {
  return Matrix3d::Identity() * (0.4 * mass * r * r);
}

Matrix3d box_inertia(double mass, const Vector3d& h) {
  const double c = mass / 3.0;
  Matrix3d I = Matrix3d::Zero();
  I(0, 0) = c * (h.y() * h.y() + h.z() * h.z());
  I(1, 1) = c * (h.x() * h.x() + h.z() * h.z());
  I(2, 2) = c * (h.x() * h.x() + h.y() * h.y());
  return I;
}

// Capsule with axis along local z, cylinder half length h, cap radius r.
Matrix3d capsule_inertia(double mass, double r, double h) {
  const double L = 2.0 * h;
  const double v_cyl = kPi * r * r * L;
  const double v_sph = 4.0 / 3.0 * kPi * r * r * r;
  const double m_cyl = mass * v_cyl / (v_cyl + v_sph);
  const double m_sph = mass - m_cyl;
  const double m_h = 0.5 * m_sph;  // one hemisphere
  const double izz = 0.5 * m_cyl * r * r + 0.4 * m_sph * r * r;
  const double d = h + 3.0 * r / 8.0;  // hemisphere com offset from centroid
  const double ixx = m_cyl * (3.0 * r * r + L * L) / 12.0 +
                     2.0 * (83.0 / 320.0 * m_h * r * r + m_h * d * d);
  Matrix3d I = Matrix3d::Zero();
  I(0, 0) = ixx;
  I(1, 1) = ixx;
  I(2, 2) = izz;
  return I;
}

Matrix3d primitive_inertia(const PlacedShape& ps, double mass) {
  Matrix3d local;
  switch (ps.shape.kind) {
    case ShapeKind::kSphere:
      local = sphere_inertia(mass, ps.shape.radius);
      break;
    case ShapeKind::kCapsule:
      local = capsule_inertia(mass, ps.shape.radius, ps.shape.half_length);
      break;
    case ShapeKind::kBox:
      local = box_inertia(mass, ps.shape.half_extents);
      break;
    default:
      local = Matrix3d::Zero();
  }
  const Matrix3d R = ps.pose.rotation.toRotationMatrix();
  return R * local * R.transpose();
}

struct MassPoint {
  double mass;
  Vector3d at;
};

LinkSpec make_link(const std::string& name, std::vector<MassPoint> parts,
                   std::vector<PlacedShape> shapes) {
  LinkSpec link;
  link.name = name;
  for (const auto& p : parts) {
    link.mass += p.mass;
    link.com += p.mass * p.at;
  }
  if (link.mass > 0) link.com /= link.mass;
  // Inertia taken from the dominant collision primitive at the link mass.
  // Good enough for the quasi-static load analysis this model feeds.
  if (!shapes.empty()) link.inertia = primitive_inertia(shapes[0], link.mass);
  link.shapes = std::move(shapes);
  return link;
}

}  // namespace

ArmVariant variant_from_string(const std::string& s) {
  if (s == "short") return ArmVariant::kShort;
  if (s == "long") return ArmVariant::kLong;
  throw std::invalid_argument("unknown arm variant: " + s);
}

std::string to_string(ArmVariant v) {
  return v == ArmVariant::kShort ? "short" : "long";
}

ArmModel build_arm(ArmVariant variant) {
  const bool is_long = variant == ArmVariant::kLong;

  // Segment lengths, meters. The long build stretches the two main beams by
  // 50 mm each.
  const double riser = 0.126;          // base plate to joint2 axis
  const double l2 = is_long ? 0.350 : 0.300;   // joint2 -> joint3
  const double lat = 0.045;            // sideways dogleg at joint3
  const double l3a = is_long ? 0.200 : 0.150;  // joint3 -> joint4
  const double l3b = 0.133;            // joint4 -> joint5
  const double wrist = 0.062;          // joint5 -> joint6
  const double tip_len = 0.145;        // joint6 -> tool tip

  // Masses, kg. Printed structural parts are weighed per variant; the
  // remaining budget covers actuators and wiring and is split across the six
  // drives in proportion to their torque class, so both variants carry the
  // same actuation mass.
  const double total_mass = is_long ? 4.894 : 4.771;
  const double printed2 = is_long ? 0.2774 : 0.2319;
  const double printed3 = is_long ? 0.2891 : 0.2116;
  const double printed5 = 0.0357;
  const double gripper_mass = 0.300;  // gripper body, fingers, wrist camera

  const double torque12 = 44.7, torque34 = 25.3, torque56 = 5.1;
  const double pool = total_mass - printed2 - printed3 - printed5 -
                      gripper_mass;
  const double tsum = 2 * (torque12 + torque34 + torque56);
  const double m12 = pool * torque12 / tsum;
  const double m34 = pool * torque34 / tsum;
  const double m56 = pool * torque56 / tsum;

  ArmModel arm;
  arm.variant = variant;
  arm.total_mass = total_mass;

  const double horiz = l2 + l3a + l3b + wrist + tip_len;
  arm.nominal_reach = std::sqrt(horiz * horiz + riser * riser);

  auto joint = [](const std::string& name, const Transform& origin,
                  const Vector3d& axis, double lo_deg, double hi_deg,
                  double speed_deg, double torque) {
    JointSpec j;
    j.name = name;
    j.origin = origin;
    j.axis = axis;
    j.limit_lo = deg_to_rad(lo_deg);
    j.limit_hi = deg_to_rad(hi_deg);
    j.max_speed = deg_to_rad(speed_deg);
    j.max_torque = torque;
    return j;
  };

  const Vector3d ux = Vector3d::UnitX();
  const Vector3d uy = Vector3d::UnitY();
  const Vector3d uz = Vector3d::UnitZ();

  arm.joints = {
      joint("joint1", Transform::identity(), uz, -180, 180, 174.0, torque12),
      joint("joint2", Transform::translate(0, 0, riser), uy, -115, 115, 174.0,
            torque12),
      joint("joint3", Transform::translate(l2, lat, 0), uy,
            is_long ? -45 : -135, 135, 175.2, torque34),
      joint("joint4", Transform::translate(l3a, -lat, 0), ux, -158, 158, 175.2,
            torque34),
      joint("joint5", Transform::translate(l3b, 0, 0), uy, -90, 90, 175.2,
            torque56),
      joint("joint6", Transform::translate(wrist, 0, 0), ux, -180, 180, 175.2,
            torque56),
  };

  arm.links.clear();
  arm.links.push_back(make_link(
      "base", {{m12, {0, 0, 0.040}}},
      {capsule_between({0, 0, 0.055}, {0, 0, 0.085}, 0.046)}));
  arm.links.push_back(make_link(
      "link1", {{m12, {0, 0, riser}}},
      {capsule_between({0, 0, 0.050}, {0, 0, riser}, 0.041)}));
  arm.links.push_back(make_link(
      "link2", {{printed2, {l2 / 2, lat / 2, 0}}, {m34, {l2, lat, 0}}},
      {capsule_between({0.095, 0.0375, 0}, {l2, lat, 0}, 0.038)}));
  arm.links.push_back(make_link(
      "link3", {{printed3, {l3a / 2, -lat / 2, 0}}, {m34, {l3a, -lat, 0}}},
      {capsule_between({0.040, -0.010, 0}, {l3a, -lat, 0}, 0.036)}));
  arm.links.push_back(make_link(
      "link4", {{m56, {l3b, 0, 0}}},
      {capsule_between({0.020, 0, 0}, {l3b, 0, 0}, 0.036)}));
  arm.links.push_back(make_link(
      "link5", {{printed5, {wrist / 2, 0, 0}}, {m56, {wrist, 0, 0}}},
      {capsule_between({0, 0, 0}, {wrist, 0, 0}, 0.034)}));
  {
    // Palm body only. The finger sweep stays open so a grasp target can sit
    // between the fingertips; grasp frames keep the object clear of this box.
    PlacedShape body;
    body.shape = Shape::box({0.0425, 0.040, 0.028});
    body.pose = Transform::translate(0.0425, 0, 0);
    arm.links.push_back(
        make_link("gripper", {{gripper_mass, {0.030, 0, 0}}}, {body}));
  }

  arm.gripper.stroke_min = 0.0;
  arm.gripper.stroke_max = 0.108;
  arm.gripper.max_speed = 0.10;
  arm.gripper.max_effort = 1.0;

  arm.tip_offset = Transform::translate(tip_len, 0, 0);
  arm.camera_offset = geometry::compose(Transform::translate(0.035, 0, 0.055),
                                        Transform::rot_y(kPi / 2));
  return arm;
}

bool within_limits(const ArmModel& arm, const Joints& q) {
  for (int i = 0; i < kNumJoints; ++i) {
    if (q[i] < arm.joints[i].limit_lo || q[i] > arm.joints[i].limit_hi)
      return false;
  }
  return true;
}

Joints clamp_to_limits(const ArmModel& arm, const Joints& q) {
  Joints out = q;
  for (int i = 0; i < kNumJoints; ++i) {
    out[i] = std::clamp(q[i], arm.joints[i].limit_lo, arm.joints[i].limit_hi);
  }
  return out;
}

}  // namespace armstack::model
