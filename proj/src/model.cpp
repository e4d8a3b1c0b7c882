#include "armstack/model.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace armstack::model {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_joints(const Joints& q) {
  std::string out;
  for (int i = 0; i < kNumJoints; ++i) {
    if (i) out += ",";
    out += fmt_double(q[i]);
  }
  return out;
}

}  // namespace

MountOrientation mount_orientation_from_string(const std::string& s) {
  if (s == "vertical") return MountOrientation::kVertical;
  if (s == "horizontal") return MountOrientation::kHorizontal;
  if (s == "angled45") return MountOrientation::kAngled45;
  throw std::invalid_argument("unknown mount orientation: " + s);
}

std::string to_string(MountOrientation o) {
  switch (o) {
    case MountOrientation::kVertical: return "vertical";
    case MountOrientation::kHorizontal: return "horizontal";
    case MountOrientation::kAngled45: return "angled45";
  }
  return "vertical";
}

void StackSettings::set(const std::string& key, double value) {
  if (key == "ik_pos_tol") ik_pos_tol = value;
  else if (key == "ik_rot_tol") ik_rot_tol = value;
  else if (key == "ik_time_budget") ik_time_budget = value;
  else if (key == "ik_max_restarts") ik_max_restarts = static_cast<int>(value);
  else if (key == "collision_margin") collision_margin = value;
  else if (key == "planner_step") planner_step = value;
  else if (key == "planner_timeout") planner_timeout = value;
  else if (key == "edge_resolution") edge_resolution = value;
  else if (key == "shortcut_passes") shortcut_passes = static_cast<int>(value);
  else if (key == "max_accel") max_accel = value;
  else if (key == "control_period") control_period = value;
  else if (key == "path_tolerance") path_tolerance = value;
  else if (key == "goal_tolerance") goal_tolerance = value;
  else if (key == "perception_rate") perception_rate = value;
  else if (key == "perception_pos_noise") perception_pos_noise = value;
  else if (key == "perception_rot_noise") perception_rot_noise = value;
  else throw std::invalid_argument("unknown setting: " + key);
}

std::map<std::string, double> StackSettings::entries() const {
  return {
      {"ik_pos_tol", ik_pos_tol},
      {"ik_rot_tol", ik_rot_tol},
      {"ik_time_budget", ik_time_budget},
      {"ik_max_restarts", static_cast<double>(ik_max_restarts)},
      {"collision_margin", collision_margin},
      {"planner_step", planner_step},
      {"planner_timeout", planner_timeout},
      {"edge_resolution", edge_resolution},
      {"shortcut_passes", static_cast<double>(shortcut_passes)},
      {"max_accel", max_accel},
      {"control_period", control_period},
      {"path_tolerance", path_tolerance},
      {"goal_tolerance", goal_tolerance},
      {"perception_rate", perception_rate},
      {"perception_pos_noise", perception_pos_noise},
      {"perception_rot_noise", perception_rot_noise},
  };
}

const MountSpec& WorldModel::mount(const std::string& name) const {
  for (const auto& m : mounts)
    if (m.name == name) return m;
  throw std::out_of_range("no mount named " + name);
}

const ArmInstance& WorldModel::arm(const std::string& name) const {
  if (const ArmInstance* a = find_arm(name)) return *a;
  throw std::out_of_range("no arm named " + name);
}

const ArmInstance* WorldModel::find_arm(const std::string& name) const {
  for (const auto& a : arms)
    if (a.name == name) return &a;
  return nullptr;
}

const SceneObject* WorldModel::find_object(const std::string& name) const {
  for (const auto& o : objects)
    if (o.name == name) return &o;
  return nullptr;
}

SceneObject* WorldModel::find_object(const std::string& name) {
  for (auto& o : objects)
    if (o.name == name) return &o;
  return nullptr;
}

ParameterSet snapshot_parameters(const WorldModel& world) {
  ParameterSet p;
  for (const auto& [key, val] : world.settings.entries())
    p["settings/" + key] = fmt_double(val);
  for (const auto& m : world.mounts) {
    p["mounts/" + m.name + "/orientation"] = to_string(m.orientation);
    auto f = geometry::pose_to_fields(m.pose);
    std::string s;
    for (size_t i = 0; i < f.size(); ++i) {
      if (i) s += ",";
      s += fmt_double(f[i]);
    }
    p["mounts/" + m.name + "/pose"] = s;
  }
  for (const auto& a : world.arms) {
    p[a.name + "/variant"] = to_string(a.arm.variant);
    p[a.name + "/mount"] = a.mount;
    p[a.name + "/total_mass"] = fmt_double(a.arm.total_mass);
    for (int i = 0; i < kNumJoints; ++i) {
      const auto& j = a.arm.joints[i];
      const std::string base = a.name + "/" + j.name + "/";
      p[base + "limit_lo"] = fmt_double(j.limit_lo);
      p[base + "limit_hi"] = fmt_double(j.limit_hi);
      p[base + "max_speed"] = fmt_double(j.max_speed);
      p[base + "max_torque"] = fmt_double(j.max_torque);
    }
  }
  for (const auto& [name, q] : world.named_poses)
    p["named_poses/" + name] = fmt_joints(q);
  return p;
}

std::string serialize_parameters(const ParameterSet& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    out += k;
    out += "=";
    out += v;
    out += "\n";
  }
  return out;
}

ParameterSet deserialize_parameters(const std::string& text) {
  ParameterSet p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("bad parameter line " +
                                  std::to_string(lineno) + ": " + line);
    p[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return p;
}

}  // namespace armstack::model
