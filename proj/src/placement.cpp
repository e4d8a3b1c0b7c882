#include "armstack/placement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "armstack/kinematics.hpp"
#include "armstack/scene.hpp"

namespace armstack::placement {

namespace {

// One damped-least-squares descent per seed keeps scoring deterministic and
// cheap; restarts would re-randomize the measure between runs.
constexpr int kSeedIterations = 100;

Joints joints_deg(double j1, double j2, double j3, double j4, double j5,
                  double j6) {
  Joints q;
  q << deg_to_rad(j1), deg_to_rad(j2), deg_to_rad(j3), deg_to_rad(j4),
      deg_to_rad(j5), deg_to_rad(j6);
  return q;
}

std::vector<double> grid_axis(double half, double resolution) {
  std::vector<double> values;
  if (half <= 0.0 || resolution <= 0.0) {
    values.push_back(0.0);
    return values;
  }
  for (double v = -half; v <= half + 1e-9; v += resolution) {
    values.push_back(v);
  }
  return values;
}

std::vector<double> yaw_axis(const MountCandidateSpace& space) {
  std::vector<double> values;
  const double span = space.yaw_max - space.yaw_min;
  if (span < 0.0 || space.angular_resolution <= 0.0) {
    values.push_back(space.yaw_min);
    return values;
  }
  const bool full_turn = span >= 2.0 * kPi - 1e-9;
  for (double yaw = space.yaw_min; yaw <= space.yaw_max + 1e-9;
       yaw += space.angular_resolution) {
    // A full circle repeats its endpoint; keep one of the two.
    if (full_turn && yaw >= space.yaw_min + 2.0 * kPi - 1e-9) break;
    values.push_back(yaw);
  }
  return values;
}

}  // namespace

const std::vector<Joints>& scoring_seeds() {
  static const std::vector<Joints> seeds = {
      Joints::Zero(),
      joints_deg(0, -60, 90, 0, -30, 0),
      joints_deg(0, 45, 45, 0, -90, 0),
      joints_deg(0, -90, 120, 0, -30, 0),
      joints_deg(0, 20, 100, 0, -60, 0),
  };
  return seeds;
}

PlacementScore reachability_score(const model::WorldModel& world,
                                  const std::string& arm_name,
                                  const geometry::Transform& mount_pose,
                                  const TaskPoseSet& tasks) {
  PlacementScore score;
  if (tasks.poses.empty()) return score;

  model::WorldModel local = world;
  const model::ArmInstance& instance = local.arm(arm_name);
  for (auto& mount : local.mounts) {
    if (mount.name == instance.mount) mount.pose = mount_pose;
  }
  scene::Scene scene(local);

  kinematics::IkOptions opts;
  opts.pos_tol = local.settings.ik_pos_tol;
  opts.rot_tol = local.settings.ik_rot_tol;
  opts.iteration_budget = kSeedIterations;
  opts.max_restarts = 0;

  // Fast cull: nothing farther from the shoulder pivot than the straightened
  // chain can be reached. The centimetre cushion covers the wrist dogleg.
  const Eigen::Vector3d shoulder = instance.arm.joints[1].origin.translation;
  const double chain_reach =
      (kinematics::tip_pose(instance.arm, Joints::Zero()).translation -
       shoulder)
          .norm();
  const double reach_limit = chain_reach + 0.01 + local.settings.ik_pos_tol;
  int reached = 0;
  double manip_sum = 0.0;
  for (const auto& task : tasks.poses) {
    const geometry::Transform target = geometry::object_in_base(mount_pose, task);
    if ((target.translation - shoulder).norm() > reach_limit) continue;
    for (const Joints& seed : scoring_seeds()) {
      const auto ik = kinematics::solve_ik(instance.arm, target, seed, opts);
      if (!ik.success) continue;
      if (scene.state_in_collision(arm_name, ik.q)) continue;
      ++reached;
      manip_sum += kinematics::manipulability(instance.arm, ik.q);
      break;
    }
  }
  score.fraction = double(reached) / double(tasks.poses.size());
  score.mean_manipulability = reached ? manip_sum / reached : 0.0;
  return score;
}

std::vector<RankedCandidate> optimize_mount(const model::WorldModel& world,
                                            const std::string& arm_name,
                                            const MountCandidateSpace& space,
                                            const TaskPoseSet& tasks,
                                            int threads) {
  if (tasks.poses.empty()) throw std::invalid_argument("empty task set");
  world.arm(arm_name);  // throws early on a bad name

  std::vector<RankedCandidate> grid;
  for (double x : grid_axis(space.half_x, space.linear_resolution)) {
    for (double y : grid_axis(space.half_y, space.linear_resolution)) {
      for (double yaw : yaw_axis(space)) {
        RankedCandidate c;
        c.offset_x = x;
        c.offset_y = y;
        c.yaw = yaw;
        c.mount_pose = geometry::compose(
            space.frame,
            geometry::compose(geometry::Transform::translate(x, y, 0.0),
                              geometry::Transform::rot_z(yaw)));
        c.index = grid.size();
        grid.push_back(c);
      }
    }
  }
  if (grid.empty()) throw std::invalid_argument("empty candidate space");

  int n_threads = threads > 0
                      ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp<int>(n_threads, 1, static_cast<int>(grid.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < grid.size();
         i = next.fetch_add(1)) {
      grid[i].score =
          reachability_score(world, arm_name, grid[i].mount_pose, tasks);
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(grid.begin(), grid.end(),
            [](const RankedCandidate& a, const RankedCandidate& b) {
              if (a.score.fraction != b.score.fraction)
                return a.score.fraction > b.score.fraction;
              if (a.score.mean_manipulability != b.score.mean_manipulability)
                return a.score.mean_manipulability > b.score.mean_manipulability;
              return a.index < b.index;
            });
  return grid;
}

TaskPoseSet parse_task_poses(const std::string& text,
                             const std::string& origin) {
  TaskPoseSet tasks;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string label;
    if (!(fields >> label)) continue;  // blank
    std::vector<double> numbers;
    double v = 0;
    while (fields >> v) numbers.push_back(v);
    if (numbers.size() != 6 && numbers.size() != 7) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected label and 6 or 7 pose fields");
    }
    tasks.labels.push_back(label);
    tasks.poses.push_back(geometry::pose_from_fields(numbers));
  }
  return tasks;
}

TaskPoseSet load_task_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open task pose file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_task_poses(buffer.str(), path);
}

MountCandidateSpace parse_candidate_space(const std::string& text,
                                          const std::string& origin) {
  const model::ParameterSet entries = model::deserialize_parameters(text);
  MountCandidateSpace space;
  bool has_frame = false;
  for (const auto& [key, value] : entries) {
    std::istringstream fields(value);
    if (key == "frame") {
      std::vector<double> numbers;
      double v = 0;
      while (fields >> v) numbers.push_back(v);
      if (numbers.size() != 6 && numbers.size() != 7) {
        throw std::runtime_error(origin + ": frame needs 6 or 7 pose fields");
      }
      space.frame = geometry::pose_from_fields(numbers);
      has_frame = true;
      continue;
    }
    double number = 0;
    if (!(fields >> number)) {
      throw std::runtime_error(origin + ": bad number for " + key);
    }
    if (key == "half_x") space.half_x = number;
    else if (key == "half_y") space.half_y = number;
    else if (key == "linear_resolution") space.linear_resolution = number;
    else if (key == "yaw_min_deg") space.yaw_min = deg_to_rad(number);
    else if (key == "yaw_max_deg") space.yaw_max = deg_to_rad(number);
    else if (key == "angular_resolution_deg")
      space.angular_resolution = deg_to_rad(number);
    else
      throw std::runtime_error(origin + ": unknown key " + key);
  }
  if (!has_frame) throw std::runtime_error(origin + ": missing frame");
  if (space.linear_resolution <= 0 || space.angular_resolution <= 0) {
    throw std::runtime_error(origin + ": resolutions must be positive");
  }
  return space;
}

MountCandidateSpace load_candidate_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open candidate file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_candidate_space(buffer.str(), path);
}

std::string ranking_csv(const std::vector<RankedCandidate>& ranked) {
  std::string out =
      "rank,x,y,z,qw,qx,qy,qz,offset_x,offset_y,yaw_deg,fraction,"
      "mean_manipulability\n";
  char buf[320];
  int rank = 1;
  for (const auto& c : ranked) {
    const auto& t = c.mount_pose.translation;
    const auto& q = c.mount_pose.rotation;
    std::snprintf(buf, sizeof(buf),
                  "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%.9g\n",
                  rank++, t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z(),
                  c.offset_x, c.offset_y, rad_to_deg(c.yaw), c.score.fraction,
                  c.score.mean_manipulability);
    out += buf;
  }
  return out;
}

}  // namespace armstack::placement
