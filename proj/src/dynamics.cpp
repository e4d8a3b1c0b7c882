#include "armstack/dynamics.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "armstack/geometry.hpp"

namespace armstack::dynamics {

using Eigen::Matrix3d;
using Eigen::Vector3d;

Joints inverse_dynamics(const model::ArmModel& arm, const DynamicsInput& in) {
  // Recursive Newton-Euler over the six moving bodies. Body k (1-based) is
  // arm.links[k]; the gripper assembly is body 6. All per-body quantities are
  // expressed in that body's own frame.
  constexpr int n = kNumJoints;

  Matrix3d rot[n + 1];   // body k frame -> parent frame
  Vector3d p[n + 1];     // body k frame origin in parent frame
  Vector3d omega[n + 1], alpha[n + 1], acc[n + 1];

  omega[0] = Vector3d::Zero();
  alpha[0] = Vector3d::Zero();
  acc[0] = -in.gravity;  // gravity enters as a base acceleration

  for (int k = 1; k <= n; ++k) {
    const auto& joint = arm.joints[k - 1];
    const geometry::Transform step = geometry::compose(
        joint.origin,
        geometry::Transform::rot_axis(joint.axis, in.q[k - 1]));
    rot[k] = step.rotation.toRotationMatrix();
    p[k] = step.translation;

    const Matrix3d r_t = rot[k].transpose();
    const Vector3d w_parent = r_t * omega[k - 1];
    const Vector3d z = joint.axis;
    omega[k] = w_parent + in.qdot[k - 1] * z;
    alpha[k] = r_t * alpha[k - 1] + in.qddot[k - 1] * z +
               w_parent.cross(in.qdot[k - 1] * z);
    acc[k] = r_t * (acc[k - 1] + alpha[k - 1].cross(p[k]) +
                    omega[k - 1].cross(omega[k - 1].cross(p[k])));
  }

  Vector3d f_child = Vector3d::Zero();  // force from body k+1 on k, frame k+1
  Vector3d n_child = Vector3d::Zero();
  Joints tau = Joints::Zero();

  for (int k = n; k >= 1; --k) {
    const auto& body = arm.links[k];
    const Vector3d a_com =
        acc[k] + alpha[k].cross(body.com) +
        omega[k].cross(omega[k].cross(body.com));
    Vector3d force = body.mass * a_com;
    Vector3d moment = body.inertia * alpha[k] +
                      omega[k].cross(body.inertia * omega[k]) +
                      body.com.cross(force);

    if (k == n && in.payload_mass > 0) {
      const Vector3d r = arm.tip_offset.translation;
      const Vector3d a_payload =
          acc[k] + alpha[k].cross(r) + omega[k].cross(omega[k].cross(r));
      const Vector3d f_payload = in.payload_mass * a_payload;
      force += f_payload;
      moment += r.cross(f_payload);
    }

    Vector3d f = force;
    Vector3d m = moment;
    if (k < n) {
      const Vector3d f_in_k = rot[k + 1] * f_child;
      f += f_in_k;
      m += rot[k + 1] * n_child + p[k + 1].cross(f_in_k);
    }
    tau[k - 1] = m.dot(arm.joints[k - 1].axis);
    f_child = f;
    n_child = m;
  }
  return tau;
}

Joints gravity_torques(const model::ArmModel& arm, const Joints& q,
                       double payload_mass, const Eigen::Vector3d& gravity) {
  DynamicsInput in;
  in.q = q;
  in.payload_mass = payload_mass;
  in.gravity = gravity;
  return inverse_dynamics(arm, in);
}

double torque_margin(const model::ArmModel& arm, const Joints& torques) {
  double worst = 0;
  for (int i = 0; i < kNumJoints; ++i)
    worst = std::max(worst, std::abs(torques[i]) / arm.joints[i].max_torque);
  return worst;
}

}  // namespace armstack::dynamics
