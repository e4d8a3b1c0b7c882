#include "armstack/harness/mission.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace armstack::harness {
namespace {

[[noreturn]] void fail(const std::string& origin, const YAML::Node& node,
                       const std::string& msg) {
  std::ostringstream out;
  out << origin;
  if (node.Mark().line >= 0)
    out << ":" << (node.Mark().line + 1) << ":" << (node.Mark().column + 1);
  out << ": " << msg;
  throw std::runtime_error(out.str());
}

double number(const std::string& origin, const YAML::Node& node,
              const std::string& what) {
  if (!node.IsScalar()) fail(origin, node, what + " must be a number");
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    fail(origin, node, what + " must be a number");
  }
}

geometry::Transform parse_pose(const std::string& origin,
                               const YAML::Node& node) {
  if (!node.IsSequence() || (node.size() != 6 && node.size() != 7))
    fail(origin, node, "pose must be a sequence of 6 or 7 numbers");
  std::vector<double> fields;
  for (const auto& v : node) fields.push_back(number(origin, v, "pose field"));
  try {
    return geometry::pose_from_fields(fields);
  } catch (const std::exception& e) {
    fail(origin, node, e.what());
  }
}

Joints parse_joint_degrees(const std::string& origin, const YAML::Node& node) {
  if (!node.IsSequence() || node.size() != kNumJoints)
    fail(origin, node, "joint target must list 6 angles in degrees");
  Joints q;
  for (int i = 0; i < kNumJoints; ++i)
    q[i] = deg_to_rad(number(origin, node[i], "joint angle"));
  return q;
}

// Step keys that carry the action; exactly one must be present.
const std::set<std::string> kActionKeys = {
    "move_named", "move_joint", "move_cartesian", "pick",
    "place",      "gripper",    "sync_group",     "wait",
    "replay"};

MissionStep parse_step(const std::string& origin, const YAML::Node& node,
                       const std::string& default_arm, bool in_group);

MissionStep parse_action(const std::string& origin, const std::string& key,
                         const YAML::Node& value,
                         const std::string& default_arm, bool in_group) {
  MissionStep step;
  step.arm = default_arm;
  if (key == "move_named") {
    step.kind = StepKind::kMoveNamed;
    if (!value.IsScalar()) fail(origin, value, "move_named needs a pose name");
    step.name = value.as<std::string>();
  } else if (key == "move_joint") {
    step.kind = StepKind::kMoveJoint;
    step.q = parse_joint_degrees(origin, value);
  } else if (key == "move_cartesian") {
    step.kind = StepKind::kMoveCartesian;
    step.pose = parse_pose(origin, value);
  } else if (key == "pick") {
    step.kind = StepKind::kPick;
    if (!value.IsScalar()) fail(origin, value, "pick needs an object name");
    step.name = value.as<std::string>();
  } else if (key == "place") {
    step.kind = StepKind::kPlace;
    step.pose = parse_pose(origin, value);
  } else if (key == "gripper") {
    step.kind = StepKind::kGripper;
    if (value.IsScalar()) {
      const std::string cmd = value.as<std::string>();
      if (cmd == "open") {
        step.name = "open";
      } else if (cmd == "close") {
        step.name = "close";
      } else {
        fail(origin, value, "gripper wants open, close, or [width, effort]");
      }
    } else if (value.IsSequence() && value.size() == 2) {
      step.name = "set";
      step.gripper_width = number(origin, value[0], "gripper width");
      step.gripper_effort = number(origin, value[1], "gripper effort");
    } else {
      fail(origin, value, "gripper wants open, close, or [width, effort]");
    }
  } else if (key == "wait") {
    step.kind = StepKind::kWait;
    step.arm.clear();
    step.wait_s = number(origin, value, "wait");
    if (step.wait_s < 0) fail(origin, value, "wait must be >= 0");
  } else if (key == "sync_group") {
    if (in_group) fail(origin, value, "sync_group cannot nest");
    step.kind = StepKind::kSyncGroup;
    step.arm.clear();
    if (!value.IsSequence() || value.size() == 0)
      fail(origin, value, "sync_group needs a list of member steps");
    for (const auto& member : value)
      step.group.push_back(parse_step(origin, member, default_arm, true));
  } else if (key == "replay") {
    step.kind = StepKind::kReplay;
    if (!value.IsScalar())
      fail(origin, value, "replay needs a trajectory file");
    step.name = value.as<std::string>();
  } else {
    fail(origin, value, "unknown step '" + key + "'");
  }
  return step;
}

MissionStep parse_step(const std::string& origin, const YAML::Node& node,
                       const std::string& default_arm, bool in_group) {
  if (!node.IsMap()) fail(origin, node, "step must be a mapping");
  std::string action;
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (kActionKeys.count(key)) {
      if (!action.empty())
        fail(origin, kv.first, "step has two actions: '" + action +
                                   "' and '" + key + "'");
      action = key;
    } else if (key != "arm" && key != "continue_on_fail") {
      fail(origin, kv.first, "unknown key '" + key + "' in step");
    }
  }
  if (action.empty()) fail(origin, node, "step has no action");

  MissionStep step =
      parse_action(origin, action, node[action], default_arm, in_group);
  if (node["arm"]) {
    if (step.kind == StepKind::kWait || step.kind == StepKind::kSyncGroup)
      fail(origin, node["arm"], action + " takes no arm");
    step.arm = node["arm"].as<std::string>();
  }
  if (node["continue_on_fail"])
    step.continue_on_fail = node["continue_on_fail"].as<bool>();
  if (in_group &&
      (step.kind == StepKind::kWait || step.kind == StepKind::kPick ||
       step.kind == StepKind::kPlace || step.kind == StepKind::kGripper))
    fail(origin, node, action + " cannot run inside a sync_group");
  return step;
}

}  // namespace

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::kMoveNamed: return "move_named";
    case StepKind::kMoveJoint: return "move_joint";
    case StepKind::kMoveCartesian: return "move_cartesian";
    case StepKind::kPick: return "pick";
    case StepKind::kPlace: return "place";
    case StepKind::kGripper: return "gripper";
    case StepKind::kSyncGroup: return "sync_group";
    case StepKind::kWait: return "wait";
    case StepKind::kReplay: return "replay";
  }
  return "?";
}

std::string MissionStep::label() const {
  std::string out = to_string(kind);
  if (kind == StepKind::kSyncGroup) {
    out += "(" + std::to_string(group.size()) + ")";
  } else if (!name.empty()) {
    out += ":" + name;
  }
  return out;
}

MissionPlan parse_mission(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  const YAML::Node m = root["mission"];
  if (!m || !m.IsMap())
    throw std::runtime_error(origin + ": missing top-level 'mission' map");
  for (const auto& kv : m) {
    const std::string key = kv.first.as<std::string>();
    if (key != "name" && key != "arm" && key != "steps")
      fail(origin, kv.first, "unknown key '" + key + "' in mission");
  }

  MissionPlan plan;
  plan.name = m["name"] ? m["name"].as<std::string>() : "mission";
  plan.default_arm = m["arm"] ? m["arm"].as<std::string>() : "";
  const YAML::Node steps = m["steps"];
  if (!steps || !steps.IsSequence() || steps.size() == 0)
    fail(origin, m, "mission needs a non-empty steps list");
  for (const auto& s : steps)
    plan.steps.push_back(parse_step(origin, s, plan.default_arm, false));
  return plan;
}

MissionPlan load_mission(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mission file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  MissionPlan plan = parse_mission(buf.str(), path);
  const size_t slash = path.find_last_of('/');
  plan.base_dir = slash == std::string::npos ? "." : path.substr(0, slash);
  return plan;
}

namespace {

void validate_step(const MissionStep& step, const model::WorldModel& world,
                   const std::string& where) {
  if (!step.arm.empty() && !world.find_arm(step.arm))
    throw std::runtime_error(where + ": unknown arm '" + step.arm + "'");
  switch (step.kind) {
    case StepKind::kMoveNamed:
      if (!world.named_poses.count(step.name))
        throw std::runtime_error(where + ": unknown named pose '" +
                                 step.name + "'");
      break;
    case StepKind::kPick: {
      if (step.name == "nearest") {
        // Resolved at run time to the closest graspable object in reach.
        bool any = false;
        for (const auto& o : world.objects) any = any || o.grasp.has_value();
        if (!any)
          throw std::runtime_error(where +
                                   ": world has no graspable objects");
        break;
      }
      const model::SceneObject* obj = world.find_object(step.name);
      if (!obj)
        throw std::runtime_error(where + ": unknown object '" + step.name +
                                 "'");
      if (!obj->grasp)
        throw std::runtime_error(where + ": object '" + step.name +
                                 "' has no grasp frame");
      break;
    }
    case StepKind::kGripper: {
      const auto& spec = world.arm(step.arm).arm.gripper;
      if (step.name == "set" &&
          (step.gripper_width < spec.stroke_min ||
           step.gripper_width > spec.stroke_max ||
           step.gripper_effort < 0 || step.gripper_effort > spec.max_effort))
        throw std::runtime_error(where + ": gripper command out of range");
      break;
    }
    case StepKind::kMoveJoint: {
      const auto& joints = world.arm(step.arm).arm.joints;
      for (int i = 0; i < kNumJoints; ++i)
        if (step.q[i] < joints[i].limit_lo || step.q[i] > joints[i].limit_hi)
          throw std::runtime_error(where + ": joint " + std::to_string(i + 1) +
                                   " target outside limits");
      break;
    }
    default:
      break;
  }
  if (step.kind != StepKind::kWait && step.kind != StepKind::kSyncGroup &&
      step.arm.empty())
    throw std::runtime_error(where + ": no arm set and the mission has no "
                                     "default arm");
}

}  // namespace

void validate_mission(const MissionPlan& plan,
                      const model::WorldModel& world) {
  for (size_t i = 0; i < plan.steps.size(); ++i) {
    const MissionStep& step = plan.steps[i];
    const std::string where =
        plan.name + " step " + std::to_string(i + 1) + " (" + step.label() +
        ")";
    validate_step(step, world, where);
    if (step.kind == StepKind::kSyncGroup) {
      std::set<std::string> arms;
      for (const MissionStep& member : step.group) {
        validate_step(member, world, where);
        if (!arms.insert(member.arm).second)
          throw std::runtime_error(where + ": arm '" + member.arm +
                                   "' appears twice in one sync_group");
      }
    }
  }
}

}  // namespace armstack::harness
