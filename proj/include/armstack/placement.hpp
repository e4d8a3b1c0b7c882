#pragma once

#include <string>
#include <vector>

#include "armstack/geometry.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::placement {

// Workspace poses the mounted arm must be able to reach, in world frame.
struct TaskPoseSet {
  std::vector<geometry::Transform> poses;
  std::vector<std::string> labels;  // parallel to poses
};

// Rectangular surface patch of admissible mount poses. Candidates are
// frame * translate(x, y, 0) * rot_z(yaw) over a regular grid.
struct MountCandidateSpace {
  geometry::Transform frame;  // patch center; z is the surface normal
  double half_x = 0.0;        // m
  double half_y = 0.0;        // m
  double linear_resolution = 0.05;      // m
  double yaw_min = -kPi;                // rad
  double yaw_max = kPi;                 // rad
  double angular_resolution = deg_to_rad(15.0);  // rad
};

struct PlacementScore {
  double fraction = 0.0;              // reached / total
  double mean_manipulability = 0.0;   // over the reached subset
};

struct RankedCandidate {
  geometry::Transform mount_pose;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double yaw = 0.0;
  PlacementScore score;
  std::size_t index = 0;  // grid enumeration order, the deterministic tiebreak
};

// Deterministic scoring seeds: the zero pose plus four spread elbow
// configurations, each descended once without random restarts.
const std::vector<Joints>& scoring_seeds();

// Re-mounts `arm_name` at mount_pose and scores the task set: a pose counts
// as reached when a seeded inverse kinematics solve lands inside tolerance
// and the resulting configuration is collision free in the full scene.
PlacementScore reachability_score(const model::WorldModel& world,
                                  const std::string& arm_name,
                                  const geometry::Transform& mount_pose,
                                  const TaskPoseSet& tasks);

// Exhaustive grid evaluation, ranked by fraction then mean manipulability.
// threads <= 0 picks the hardware concurrency; results are merged in grid
// order, so the ranking does not depend on the thread count.
std::vector<RankedCandidate> optimize_mount(const model::WorldModel& world,
                                            const std::string& arm_name,
                                            const MountCandidateSpace& space,
                                            const TaskPoseSet& tasks,
                                            int threads = 0);

// File formats: see FORMATS.md. Task poses are one labeled pose per line;
// candidate spaces are key=value with angles in degrees.
TaskPoseSet load_task_poses(const std::string& path);
TaskPoseSet parse_task_poses(const std::string& text,
                             const std::string& origin);
MountCandidateSpace load_candidate_space(const std::string& path);
MountCandidateSpace parse_candidate_space(const std::string& text,
                                          const std::string& origin);

std::string ranking_csv(const std::vector<RankedCandidate>& ranked);

}  // namespace armstack::placement
