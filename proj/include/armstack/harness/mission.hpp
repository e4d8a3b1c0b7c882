#pragma once

#include <string>
#include <vector>

#include "armstack/geometry.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::harness {

enum class StepKind {
  kMoveNamed,
  kMoveJoint,
  kMoveCartesian,
  kPick,
  kPlace,
  kGripper,
  kSyncGroup,
  kWait,
  kReplay,
};

std::string to_string(StepKind k);

struct MissionStep {
  StepKind kind = StepKind::kWait;
  std::string arm;   // executing arm; empty only for wait / sync_group
  std::string name;  // named pose, object id, or replay file
  Joints q = Joints::Zero();        // move_joint target, rad
  geometry::Transform pose;         // move_cartesian tip / place object pose
  double gripper_width = 0;         // m
  double gripper_effort = 0;        // normalized
  double wait_s = 0;                // s
  bool continue_on_fail = false;
  std::vector<MissionStep> group;   // sync_group members

  std::string label() const;
};

struct MissionPlan {
  std::string name;
  std::string default_arm;
  std::vector<MissionStep> steps;
  std::string base_dir;  // replay files resolve against this
};

MissionPlan parse_mission(const std::string& text, const std::string& origin);
MissionPlan load_mission(const std::string& path);

/// Checks every reference against the world: arms exist, named poses and
/// objects exist, picked objects carry a grasp frame, sync group members
/// drive distinct arms. Throws on the first problem.
void validate_mission(const MissionPlan& plan, const model::WorldModel& world);

}  // namespace armstack::harness
