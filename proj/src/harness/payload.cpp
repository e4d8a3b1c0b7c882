#include "armstack/harness/payload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "armstack/control.hpp"
#include "armstack/dynamics.hpp"
#include "armstack/kinematics.hpp"
#include "armstack/planning.hpp"
#include "armstack/scene.hpp"
#include "armstack/trajectory.hpp"
#include "armstack/world_io.hpp"

namespace armstack::harness {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

PayloadResult validate_payload(const model::WorldModel& world,
                               const PayloadOptions& opts) {
  if (world.arms.empty())
    throw std::invalid_argument("world has no arms to load test");
  if (opts.n_poses <= 0 || opts.n_select <= 0 ||
      opts.n_select > opts.n_poses)
    throw std::invalid_argument("need 0 < n_select <= n_poses");
  if (opts.shell <= 0 || opts.shell >= 1)
    throw std::invalid_argument("shell fraction must be in (0, 1)");

  const std::string arm_name =
      opts.arm.empty() ? world.arms[0].name : opts.arm;
  const model::ArmInstance& inst = world.arm(arm_name);
  const model::ArmModel& spec = inst.arm;
  const geometry::Transform base = world.mount(inst.mount).pose;
  const Eigen::Vector3d g_base = base.rotation.conjugate() *
                                 Eigen::Vector3d(0, 0, -dynamics::kGravity);

  scene::Scene scene(world);
  Joints initial = Joints::Zero();
  if (auto it = world.named_poses.find(arm_name + "/home");
      it != world.named_poses.end()) {
    initial = it->second;
  } else if (auto home = world.named_poses.find("home");
             home != world.named_poses.end()) {
    initial = home->second;
  }
  scene.set_config(arm_name, initial);

  PayloadResult result;
  result.report.world = "payload";
  result.report.mission = "payload";
  result.report.scenario = world_io::scenario_hash(world);
  result.report.seed = opts.seed;
  result.report.mode = "simulate";

  // Boundary shell sampling: uniform in-limit configurations kept when the
  // tip lands in the outer shell of the reach sphere, collision free.
  const double reach = spec.nominal_reach;
  const double r_min = (1.0 - opts.shell) * reach;
  std::mt19937_64 rng(opts.seed);
  std::vector<std::uniform_real_distribution<double>> joint_dist;
  for (int j = 0; j < kNumJoints; ++j)
    joint_dist.emplace_back(spec.joints[j].limit_lo, spec.joints[j].limit_hi);

  const long max_attempts = 500L * opts.n_poses;
  long attempts = 0;
  while (static_cast<int>(result.poses.size()) < opts.n_poses) {
    if (++attempts > max_attempts)
      throw InsufficientSamples(
          "found " + std::to_string(result.poses.size()) + " of " +
          std::to_string(opts.n_poses) + " boundary poses after " +
          std::to_string(max_attempts) + " samples");
    Joints q;
    for (int j = 0; j < kNumJoints; ++j) q[j] = joint_dist[j](rng);
    const double radius = kinematics::tip_pose(spec, q).translation.norm();
    if (radius < r_min || radius > reach + 1e-9) continue;
    if (scene.state_in_collision(arm_name, q)) continue;
    PayloadPose pose;
    pose.q = q;
    pose.tip_radius = radius;
    pose.margin = dynamics::torque_margin(
        spec, dynamics::gravity_torques(spec, q, opts.mass, g_base));
    result.poses.push_back(pose);
  }

  // Pick the highest-margin poses, then order them as a greedy
  // nearest-neighbor tour from the start configuration.
  std::vector<int> by_margin(result.poses.size());
  std::iota(by_margin.begin(), by_margin.end(), 0);
  std::stable_sort(by_margin.begin(), by_margin.end(), [&](int a, int b) {
    return result.poses[a].margin > result.poses[b].margin;
  });
  std::vector<int> chosen(by_margin.begin(), by_margin.begin() + opts.n_select);
  for (int idx : chosen) result.poses[idx].selected = true;

  Joints cursor = initial;
  while (!chosen.empty()) {
    auto best = std::min_element(
        chosen.begin(), chosen.end(), [&](int a, int b) {
          const double da = (result.poses[a].q - cursor).norm();
          const double db = (result.poses[b].q - cursor).norm();
          return da != db ? da < db : a < b;
        });
    result.order.push_back(*best);
    cursor = result.poses[*best].q;
    chosen.erase(best);
  }

  // Plan and execute the tour with the payload applied, tracking the worst
  // utilization the drives see.
  control::ControllerManager manager(control::ControlConfig{
      world.settings.control_period, world.settings.path_tolerance,
      world.settings.goal_tolerance});
  control::ArmController& ctl = manager.add_arm(arm_name, spec, initial);

  planning::PlanOptions po;
  po.step = world.settings.planner_step;
  po.resolution = world.settings.edge_resolution;
  po.max_iterations =
      std::max(1, static_cast<int>(world.settings.planner_timeout * 3000.0));
  po.shortcut_passes = world.settings.shortcut_passes;

  result.collision_free = true;
  bool failed = false;
  std::uint64_t leg_seed = opts.seed;
  for (size_t leg = 0; leg < result.order.size() && !failed; ++leg) {
    const int target = result.order[leg];
    StepResult step;
    step.index = static_cast<int>(leg + 1);
    step.label = "leg" + std::to_string(leg + 1) + ":pose" +
                 std::to_string(target);
    step.arm = arm_name;
    step.t_start = manager.time();

    po.seed = ++leg_seed;
    const Joints start = ctl.reference();
    const planning::PlanResult planned =
        planning::plan_path(scene, arm_name, start, result.poses[target].q, po);
    if (!planned.success) {
      step.error = "planning failed: " + planned.failure;
      failed = true;
    } else {
      trajectory::Trajectory traj = trajectory::time_parameterize(
          planned.path, spec, world.settings.max_accel);
      traj.arm = arm_name;
      traj.seed = po.seed;
      traj.scenario = result.report.scenario;

      // Fine-grained recheck of every executed segment.
      for (size_t i = 0; i + 1 < traj.points.size(); ++i) {
        if (scene.segment_in_collision(arm_name, traj.points[i].q,
                                       traj.points[i + 1].q,
                                       world.settings.edge_resolution / 10.0))
          result.collision_free = false;
      }

      if (!ctl.execute_trajectory(traj, manager.time())) {
        step.error = ctl.last_error();
        failed = true;
      } else {
        const double deadline = manager.time() + traj.duration() + 2.0;
        while (ctl.state() == control::ControllerState::kTracking) {
          manager.tick();
          const Joints enc = ctl.encoders();
          scene.set_config(arm_name, enc);
          const double margin = dynamics::torque_margin(
              spec,
              dynamics::gravity_torques(spec, enc, opts.mass, g_base));
          step.peak_margin = std::max(step.peak_margin, margin);
          step.max_tracking_err =
              std::max(step.max_tracking_err,
                       (ctl.reference() - enc).cwiseAbs().maxCoeff());
          if (manager.time() > deadline) break;
        }
        if (ctl.state() != control::ControllerState::kIdle ||
            !ctl.goal_reached()) {
          step.error = ctl.last_error().empty() ? "goal not reached"
                                                : ctl.last_error();
          failed = true;
        }
      }
      char buf[16];
      std::snprintf(buf, sizeof(buf), "traj_leg%02zu_", leg + 1);
      step.trajectory_file = buf + arm_name + ".csv";
      result.report.trajectories.emplace_back(step.trajectory_file,
                                              std::move(traj));
      result.peak_execution_margin =
          std::max(result.peak_execution_margin, step.peak_margin);
      result.max_tracking_err =
          std::max(result.max_tracking_err, step.max_tracking_err);
    }
    step.ok = step.error.empty();
    step.t_end = manager.time();
    result.report.steps.push_back(std::move(step));
  }

  result.success = !failed && result.collision_free &&
                   result.peak_execution_margin < 1.0;
  result.report.success = result.success;
  result.report.virtual_duration = manager.time();

  // Full sample table for offline scrutiny; angles in degrees like every
  // other joint file.
  std::string table = "index,selected,tip_radius,margin,q1,q2,q3,q4,q5,q6\n";
  for (size_t i = 0; i < result.poses.size(); ++i) {
    const PayloadPose& p = result.poses[i];
    table += std::to_string(i) + "," + (p.selected ? "1" : "0") + "," +
             num(p.tip_radius) + "," + num(p.margin);
    for (int j = 0; j < kNumJoints; ++j) table += "," + num(rad_to_deg(p.q[j]));
    table += "\n";
  }
  result.report.files.emplace_back("poses.csv", std::move(table));

  std::string order_text;
  for (size_t i = 0; i < result.order.size(); ++i)
    order_text += (i ? ";" : "") + std::to_string(result.order[i]);
  result.report.extra["payload_mass"] = num(opts.mass);
  result.report.extra["shell"] = num(opts.shell);
  result.report.extra["poses"] = std::to_string(opts.n_poses);
  result.report.extra["selected"] = order_text;
  result.report.extra["peak_execution_margin"] =
      num(result.peak_execution_margin);
  result.report.extra["collision_free"] = result.collision_free ? "1" : "0";
  return result;
}

}  // namespace armstack::harness
