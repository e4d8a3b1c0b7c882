#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "armstack/geometry.hpp"
#include "armstack/shapes.hpp"
#include "armstack/types.hpp"

namespace armstack::model {

enum class ArmVariant { kShort, kLong };

ArmVariant variant_from_string(const std::string& s);
std::string to_string(ArmVariant v);

struct JointSpec {
  std::string name;
  geometry::Transform origin;  // parent link frame -> joint frame at q = 0
  Eigen::Vector3d axis{0, 0, 1};  // unit, in the joint frame
  double limit_lo = 0;            // rad
  double limit_hi = 0;            // rad
  double max_speed = 0;           // rad/s
  double max_torque = 0;          // N*m
};

struct LinkSpec {
  std::string name;
  double mass = 0;  // kg
  Eigen::Vector3d com{0, 0, 0};   // link frame
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  // about com, link frame
  std::vector<PlacedShape> shapes;  // collision geometry, link frame
};

struct GripperSpec {
  double stroke_min = 0;    // m, opening width
  double stroke_max = 0;    // m
  double max_speed = 0;     // m/s
  double max_effort = 0;    // normalized command scale
};

struct ArmModel {
  ArmVariant variant = ArmVariant::kShort;
  // links[0] is the mounted base; links[i] for i in 1..6 is the child of
  // joints[i-1]. links[6] is the gripper assembly.
  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;
  GripperSpec gripper;
  geometry::Transform tip_offset;     // last link frame -> tool tip
  geometry::Transform camera_offset;  // last link frame -> wrist camera
  double total_mass = 0;              // kg
  double nominal_reach = 0;           // m, base origin to tip at q = 0
};

/// Builds the fixed six-joint arm description for the requested variant.
ArmModel build_arm(ArmVariant variant);

bool within_limits(const ArmModel& arm, const Joints& q);
Joints clamp_to_limits(const ArmModel& arm, const Joints& q);

enum class MountOrientation { kVertical, kHorizontal, kAngled45 };

MountOrientation mount_orientation_from_string(const std::string& s);
std::string to_string(MountOrientation o);

struct MountSpec {
  std::string name;
  MountOrientation orientation = MountOrientation::kVertical;
  geometry::Transform pose;  // world -> arm base frame
};

struct ArmInstance {
  std::string name;
  std::string mount;  // name of the mount the arm is plugged into
  ArmModel arm;
};

struct SceneObject {
  std::string name;
  Shape shape;
  geometry::Transform pose;  // world -> object frame
  // Object frame -> preferred tool-tip grasp frame, if the object is
  // graspable.
  std::optional<geometry::Transform> grasp;
  double mass = 0;  // kg, counts as tip payload while held
};

/// Tunable stack-wide settings with their defaults. World files may override
/// individual entries in a `settings:` section.
struct StackSettings {
  double ik_pos_tol = 1e-3;                    // m
  double ik_rot_tol = deg_to_rad(0.5);         // rad
  double ik_time_budget = 0.05;                // s
  int ik_max_restarts = 20;
  double collision_margin = 0.005;             // m, arm shape inflation
  double planner_step = 0.1;                   // rad, extend step
  double planner_timeout = 5.0;                // s
  double edge_resolution = 0.02;               // rad, collision sub-steps
  int shortcut_passes = 50;
  double max_accel = deg_to_rad(300.0);        // rad/s^2, time param
  double control_period = 0.008;               // s
  double path_tolerance = deg_to_rad(3.0);     // rad
  double goal_tolerance = deg_to_rad(0.5);     // rad
  double perception_rate = 15.0;               // Hz
  double perception_pos_noise = 0.002;         // m, 1 sigma per axis
  double perception_rot_noise = deg_to_rad(1.0);  // rad, 1 sigma

  void set(const std::string& key, double value);  // throws on unknown key
  std::map<std::string, double> entries() const;
};

struct WorldModel {
  std::vector<MountSpec> mounts;
  std::vector<ArmInstance> arms;
  std::vector<NamedShape> obstacles;
  std::vector<SceneObject> objects;
  std::map<std::string, Joints> named_poses;  // rad
  // Extra collision pairs to ignore, by shape owner name (e.g. arm link name
  // "arm1/link2" or obstacle name).
  std::vector<std::pair<std::string, std::string>> allowed_collisions;
  StackSettings settings;

  const MountSpec& mount(const std::string& name) const;
  const ArmInstance& arm(const std::string& name) const;
  const ArmInstance* find_arm(const std::string& name) const;
  const SceneObject* find_object(const std::string& name) const;
  SceneObject* find_object(const std::string& name);
};

/// Flat string key/value view of everything configurable at runtime.
using ParameterSet = std::map<std::string, std::string>;

ParameterSet snapshot_parameters(const WorldModel& world);
std::string serialize_parameters(const ParameterSet& params);
ParameterSet deserialize_parameters(const std::string& text);

}  // namespace armstack::model
