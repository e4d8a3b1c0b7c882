#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "armstack/control.hpp"
#include "armstack/dynamics.hpp"
#include "armstack/geometry.hpp"
#include "armstack/harness/mission.hpp"
#include "armstack/harness/payload.hpp"
#include "armstack/harness/perception.hpp"
#include "armstack/harness/report.hpp"
#include "armstack/harness/runner.hpp"
#include "armstack/kinematics.hpp"
#include "armstack/scene.hpp"
#include "armstack/trajectory.hpp"
#include "armstack/world_io.hpp"

using namespace armstack;
using harness::MissionPlan;
using harness::MissionStep;
using harness::RunOptions;
using harness::RunReport;
using harness::StepKind;

namespace {

const char* kBenchWorld = R"(
mounts:
  - {name: column, orientation: vertical, pose: [0, 0, 0.5, 1, 0, 0, 0]}
arms:
  - {name: arm1, variant: short, mount: column}
obstacles:
  - {name: floor, box: [3.0, 3.0, 0.1], pose: [0, 0, -0.05, 1, 0, 0, 0]}
  - {name: table, box: [0.5, 0.5, 0.04], pose: [0.45, 0.0, 0.53, 1, 0, 0, 0]}
objects:
  - name: cup
    capsule: [0.030, 0.10]
    pose: [0.35, 0.15, 0.632, 1, 0, 0, 0]
    grasp: [0, 0, 0.042, 0.7071067811865476, 0, 0.7071067811865476, 0]
    mass: 0.2
named_poses:
  home: [0, -60, 100, 0, -40, 0]
  lookout: [0, -45, 80, 0, -35, 0]
)";

const char* kTwinWorld = R"(
mounts:
  - {name: left, orientation: vertical, pose: [0, 0.5, 0.5, 1, 0, 0, 0]}
  - {name: right, orientation: vertical, pose: [0, -0.5, 0.5, 1, 0, 0, 0]}
arms:
  - {name: arm1, variant: short, mount: left}
  - {name: arm2, variant: short, mount: right}
obstacles:
  - {name: floor, box: [3.0, 3.0, 0.1], pose: [0, 0, -0.05, 1, 0, 0, 0]}
named_poses:
  home: [0, -60, 100, 0, -40, 0]
  reach: [0, -20, 60, 0, -40, 0]
)";

model::WorldModel bench_world() {
  return world_io::parse_world(kBenchWorld, "bench");
}

model::WorldModel twin_world() {
  return world_io::parse_world(kTwinWorld, "twin");
}

MissionPlan plan_of(const std::string& yaml) {
  return harness::parse_mission(yaml, "doc");
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("armstack_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("mission parsing covers every step kind") {
  const MissionPlan plan = plan_of(R"(
mission:
  name: demo
  arm: arm1
  steps:
    - move_named: home
    - move_joint: [0, -30, 45, 10, -15, 5]
    - move_cartesian: [0.4, 0.1, 0.7, 1, 0, 0, 0]
    - pick: cup
    - place: [0.4, -0.1, 0.7, 0, 0, 0]
    - gripper: open
    - gripper: [0.05, 0.4]
    - wait: 0.25
    - sync_group:
        - {arm: arm1, move_named: home}
        - {arm: arm2, move_joint: [0, 0, 0, 0, 0, 0]}
    - replay: recorded.csv
)");
  CHECK(plan.name == "demo");
  CHECK(plan.default_arm == "arm1");
  REQUIRE(plan.steps.size() == 10);
  CHECK(plan.steps[0].kind == StepKind::kMoveNamed);
  CHECK(plan.steps[0].name == "home");
  CHECK(plan.steps[0].arm == "arm1");
  CHECK(plan.steps[1].kind == StepKind::kMoveJoint);
  CHECK(plan.steps[1].q[1] == doctest::Approx(deg_to_rad(-30.0)));
  CHECK(plan.steps[2].kind == StepKind::kMoveCartesian);
  CHECK(plan.steps[2].pose.translation.x() == doctest::Approx(0.4));
  CHECK(plan.steps[3].kind == StepKind::kPick);
  CHECK(plan.steps[3].name == "cup");
  CHECK(plan.steps[4].kind == StepKind::kPlace);
  CHECK(plan.steps[5].kind == StepKind::kGripper);
  CHECK(plan.steps[5].name == "open");
  CHECK(plan.steps[6].name == "set");
  CHECK(plan.steps[6].gripper_width == doctest::Approx(0.05));
  CHECK(plan.steps[7].kind == StepKind::kWait);
  CHECK(plan.steps[7].wait_s == doctest::Approx(0.25));
  CHECK(plan.steps[7].arm.empty());
  REQUIRE(plan.steps[8].kind == StepKind::kSyncGroup);
  REQUIRE(plan.steps[8].group.size() == 2);
  CHECK(plan.steps[8].group[0].arm == "arm1");
  CHECK(plan.steps[8].group[1].arm == "arm2");
  CHECK(plan.steps[9].kind == StepKind::kReplay);
  CHECK(plan.steps[9].name == "recorded.csv");
  CHECK(plan.steps[9].label() == "replay:recorded.csv");
}

TEST_CASE("malformed missions are rejected with located errors") {
  auto bad = [](const std::string& yaml) {
    CHECK_THROWS_AS((void)harness::parse_mission(yaml, "doc"),
                    std::runtime_error);
  };
  bad("steps: []");                                       // no mission map
  bad("mission: {name: x, arm: a, steps: []}");           // empty steps
  bad("mission:\n  steps:\n    - {move_named: a, pick: b}");  // two actions
  bad("mission:\n  steps:\n    - {jump: high}");          // unknown action
  bad("mission:\n  steps:\n    - {wait: -1}");            // negative wait
  bad("mission:\n  steps:\n    - {move_joint: [1, 2]}");  // short vector
  bad("mission:\n  steps:\n    - {gripper: crush}");      // bad keyword
  bad("mission:\n  steps:\n    - {wait: 1, arm: a}");     // wait takes no arm
  bad("mission:\n  steps:\n    - sync_group:\n        - sync_group: []");
  bad("mission:\n  steps:\n    - sync_group:\n        - {pick: cup, arm: a}");
  bad("mission:\n  typo: 1\n  steps:\n    - {wait: 1}");  // unknown key
}

TEST_CASE("mission validation cross-checks the world") {
  const model::WorldModel world = bench_world();
  auto invalid = [&](const std::string& yaml) {
    const MissionPlan plan = plan_of(yaml);
    CHECK_THROWS_AS(harness::validate_mission(plan, world),
                    std::runtime_error);
  };
  invalid("mission:\n  arm: ghost\n  steps:\n    - {move_named: home}");
  invalid("mission:\n  arm: arm1\n  steps:\n    - {move_named: nowhere}");
  invalid("mission:\n  arm: arm1\n  steps:\n    - {pick: unicorn}");
  invalid("mission:\n  arm: arm1\n  steps:\n    - {gripper: [0.3, 0.5]}");
  invalid("mission:\n  steps:\n    - {move_named: home}");  // no arm anywhere
  invalid(
      "mission:\n  arm: arm1\n  steps:\n"
      "    - {move_joint: [0, -130, 0, 0, 0, 0]}");  // outside limits
  invalid(
      "mission:\n  steps:\n"
      "    - sync_group:\n"
      "        - {arm: arm1, move_named: home}\n"
      "        - {arm: arm1, move_named: lookout}");

  const MissionPlan ok = plan_of(
      "mission:\n  arm: arm1\n  steps:\n    - {move_named: lookout}");
  CHECK_NOTHROW(harness::validate_mission(ok, world));
}

TEST_CASE("a joint-space mission runs to completion on one clock") {
  const model::WorldModel world = bench_world();
  const MissionPlan plan = plan_of(R"(
mission:
  name: tour
  arm: arm1
  steps:
    - move_named: lookout
    - wait: 0.2
    - move_joint: [10, -50, 90, 0, -40, 0]
    - move_named: home
)");
  RunOptions opts;
  opts.seed = 11;
  const RunReport report = harness::run_mission(world, plan, opts);
  REQUIRE(report.steps.size() == 4);
  for (const auto& s : report.steps) {
    CAPTURE(s.label);
    CAPTURE(s.error);
    CHECK(s.ok);
  }
  CHECK(report.success);
  CHECK(report.mode == "simulate");
  CHECK(report.seed == 11);

  // Virtual clock: durations are exact multiples of the 8 ms period, and
  // the wait step spans at least its requested time.
  const double period = world.settings.control_period;
  CHECK(report.virtual_duration ==
        doctest::Approx(std::round(report.virtual_duration / period) * period));
  const auto& wait = report.steps[1];
  CHECK(wait.t_end - wait.t_start >= 0.2 - 1e-9);

  // Motion steps tracked tightly and left torque headroom.
  for (const auto& s : report.steps) {
    CHECK(s.max_tracking_err < deg_to_rad(3.0));
    CHECK(s.peak_margin < 1.0);
  }
  CHECK(report.trajectories.size() == 3);
  CHECK(report.steps[0].trajectory_file == "traj_01_arm1.csv");
}

TEST_CASE("cartesian motion ends with the tool at the requested pose") {
  const model::WorldModel world = bench_world();
  // A pose the bench arm can reach: above the table, tool pointing down.
  const geometry::Transform target = geometry::compose(
      geometry::Transform::translate(0.35, -0.12, 0.68),
      geometry::Transform::rot_y(kPi / 2));
  std::ostringstream yaml;
  yaml << "mission:\n  arm: arm1\n  steps:\n    - move_cartesian: [";
  const auto fields = geometry::pose_to_fields(target);
  for (size_t i = 0; i < fields.size(); ++i)
    yaml << (i ? ", " : "") << fields[i];
  yaml << "]\n";
  const MissionPlan plan = plan_of(yaml.str());
  const RunReport report = harness::run_mission(world, plan, {});
  REQUIRE(report.steps.size() == 1);
  CAPTURE(report.steps[0].error);
  REQUIRE(report.steps[0].ok);

  // Reconstruct the final configuration from the executed trajectory and
  // check the tool frame.
  REQUIRE(report.trajectories.size() == 1);
  const trajectory::Trajectory& traj = report.trajectories[0].second;
  const Joints q_end = traj.points.back().q;
  const geometry::Transform base = world.mount("column").pose;
  const geometry::Transform tip = geometry::compose(
      base, kinematics::tip_pose(world.arm("arm1").arm, q_end));
  const auto [derr, aerr] = geometry::pose_distance(tip, target);
  CHECK(derr < world.settings.ik_pos_tol + 1e-6);
  CHECK(aerr < world.settings.ik_rot_tol + 1e-6);
}

TEST_CASE("pick and place moves the object and reports its final pose") {
  const model::WorldModel world = bench_world();
  const MissionPlan plan = plan_of(R"(
mission:
  name: restack
  arm: arm1
  steps:
    - move_named: lookout
    - pick: cup
    - place: [0.35, -0.15, 0.64, 1, 0, 0, 0]
    - move_named: home
)");
  RunOptions opts;
  opts.seed = 3;
  const RunReport report = harness::run_mission(world, plan, opts);
  for (const auto& s : report.steps) {
    CAPTURE(s.label);
    CAPTURE(s.error);
    CHECK(s.ok);
  }
  REQUIRE(report.success);

  REQUIRE(report.extra.count("object_cup"));
  std::istringstream in(report.extra.at("object_cup"));
  std::vector<double> fields;
  double v;
  while (in >> v) fields.push_back(v);
  REQUIRE(fields.size() == 7);
  const geometry::Transform placed = geometry::pose_from_fields(fields);
  const geometry::Transform want =
      geometry::Transform::translate(0.35, -0.15, 0.64);
  const auto [derr, aerr] = geometry::pose_distance(placed, want);
  // Placement error budget: perception noise plus IK tolerance plus the
  // encoder quantum across the arm.
  CHECK(derr < 0.02);
  CHECK(aerr < deg_to_rad(6.0));
}

TEST_CASE("a failing step aborts the mission unless marked continue") {
  const model::WorldModel world = bench_world();
  // The target pose sinks the palm into the table: no collision-free goal.
  const char* yaml = R"(
mission:
  arm: arm1
  steps:
    - move_named: lookout
    - {move_cartesian: [0.45, 0.0, 0.45, 0.7071067811865476, 0, 0.7071067811865476, 0]%CONT%}
    - move_named: home
)";
  std::string strict = yaml;
  strict.replace(strict.find("%CONT%"), 6, "");
  const RunReport aborted =
      harness::run_mission(world, plan_of(strict), {});
  REQUIRE(aborted.steps.size() == 3);
  CHECK(aborted.steps[0].ok);
  CHECK_FALSE(aborted.steps[1].ok);
  CHECK(aborted.steps[1].error.find("goal") != std::string::npos);
  CHECK_FALSE(aborted.steps[2].ok);
  CHECK(aborted.steps[2].error == "skipped");
  CHECK_FALSE(aborted.success);

  std::string tolerant = yaml;
  tolerant.replace(tolerant.find("%CONT%"), 6, ", continue_on_fail: true");
  const RunReport resumed =
      harness::run_mission(world, plan_of(tolerant), {});
  REQUIRE(resumed.steps.size() == 3);
  CHECK_FALSE(resumed.steps[1].ok);
  CHECK(resumed.steps[2].ok);
  CHECK_FALSE(resumed.success);
}

TEST_CASE("replay executes a recorded trajectory, pre-positioning if needed") {
  const model::WorldModel world = bench_world();
  // Record: a planned motion from home to lookout.
  const MissionPlan rec_plan = plan_of(
      "mission:\n  arm: arm1\n  steps:\n    - {move_named: lookout}");
  RunOptions opts;
  opts.seed = 5;
  RunReport recorded = harness::run_mission(world, rec_plan, opts);
  REQUIRE(recorded.success);
  REQUIRE(recorded.trajectories.size() == 1);

  const auto dir = temp_dir("replay");
  const std::string traj_path = (dir / "recorded.csv").string();
  trajectory::save(recorded.trajectories[0].second, traj_path);

  // Replay from home: starts where the recording starts, no pre-move.
  const MissionPlan direct = harness::parse_mission(
      "mission:\n  arm: arm1\n  steps:\n    - {replay: " + traj_path + "}",
      "doc");
  const RunReport direct_run = harness::run_mission(world, direct, opts);
  CAPTURE(direct_run.steps[0].error);
  REQUIRE(direct_run.success);
  CHECK(direct_run.trajectories.size() == 1);

  // Replay from elsewhere: a planned pre-positioning leg appears first.
  const MissionPlan offset = harness::parse_mission(
      "mission:\n  arm: arm1\n  steps:\n"
      "    - {move_joint: [-20, -70, 110, 0, -40, 0]}\n"
      "    - {replay: " + traj_path + "}",
      "doc");
  const RunReport offset_run = harness::run_mission(world, offset, opts);
  CAPTURE(offset_run.steps[0].error);
  CAPTURE(offset_run.steps[1].error);
  REQUIRE(offset_run.success);
  REQUIRE(offset_run.trajectories.size() == 3);
  CHECK(offset_run.trajectories[1].first.find("_pre") != std::string::npos);

  // A recording that violates the speed limits is rejected up front.
  trajectory::Trajectory fast = recorded.trajectories[0].second;
  REQUIRE(fast.points.size() >= 2);
  for (size_t i = 1; i < fast.points.size(); ++i)
    fast.points[i].t = fast.points[i - 1].t + 1e-4;
  const std::string fast_path = (dir / "fast.csv").string();
  trajectory::save(fast, fast_path);
  const MissionPlan too_fast = harness::parse_mission(
      "mission:\n  arm: arm1\n  steps:\n    - {replay: " + fast_path + "}",
      "doc");
  const RunReport fast_run = harness::run_mission(world, too_fast, opts);
  CHECK_FALSE(fast_run.success);
  CHECK(fast_run.steps[0].error.find("speed") != std::string::npos);

  std::filesystem::remove_all(dir);
}

TEST_CASE("sync groups run member motions concurrently") {
  const model::WorldModel world = twin_world();
  const MissionPlan plan = plan_of(R"(
mission:
  name: duet
  steps:
    - sync_group:
        - {arm: arm1, move_named: reach}
        - {arm: arm2, move_named: reach}
    - sync_group:
        - {arm: arm1, move_named: home}
        - {arm: arm2, move_named: home}
)");
  const RunReport report = harness::run_mission(world, plan, {});
  for (const auto& s : report.steps) {
    CAPTURE(s.error);
    CHECK(s.ok);
  }
  REQUIRE(report.success);
  REQUIRE(report.trajectories.size() == 4);

  // Concurrency: the group takes about as long as its longest member, not
  // the sum of both.
  double dur1 = report.trajectories[0].second.duration();
  double dur2 = report.trajectories[1].second.duration();
  const auto& s0 = report.steps[0];
  CHECK(s0.t_end - s0.t_start < dur1 + dur2);
  CHECK(s0.t_end - s0.t_start >= std::max(dur1, dur2) - 1e-9);
  CHECK(report.extra.count("min_clearance"));
  CHECK(std::stod(report.extra.at("min_clearance")) > 0.0);
}

TEST_CASE("distributed mode reaches the same goals through the protocol") {
  const model::WorldModel world = twin_world();
  const MissionPlan plan = plan_of(R"(
mission:
  name: duet
  steps:
    - sync_group:
        - {arm: arm1, move_named: reach}
        - {arm: arm2, move_named: reach}
    - sync_group:
        - {arm: arm1, move_named: home}
        - {arm: arm2, move_named: home}
)");
  RunOptions opts;
  opts.seed = 21;
  opts.mode = harness::RunMode::kDistributed;
  const RunReport report = harness::run_mission(world, plan, opts);
  for (const auto& s : report.steps) {
    CAPTURE(s.label);
    CAPTURE(s.error);
    CHECK(s.ok);
  }
  REQUIRE(report.success);
  CHECK(report.mode == "distributed");

  // The broadcast start instant adds latency guard time beyond the raw
  // trajectory durations.
  const auto& s0 = report.steps[0];
  const double dur = report.trajectories[0].second.duration();
  CHECK(s0.t_end - s0.t_start >= dur + 0.05 - 1e-9);

  // Same goals as the direct run.
  const RunReport direct = harness::run_mission(world, plan, {});
  REQUIRE(direct.success);
  CHECK(direct.trajectories[0].second.points.back().q.isApprox(
      report.trajectories[0].second.points.back().q, 1e-12));
}

TEST_CASE("identical seeds reproduce a mission report byte for byte") {
  const model::WorldModel world = bench_world();
  const MissionPlan plan = plan_of(R"(
mission:
  name: restack
  arm: arm1
  steps:
    - move_named: lookout
    - pick: cup
    - place: [0.35, -0.15, 0.64, 1, 0, 0, 0]
    - move_named: home
)");
  RunOptions opts;
  opts.seed = 1234;
  const RunReport a = harness::run_mission(world, plan, opts);
  const RunReport b = harness::run_mission(world, plan, opts);
  REQUIRE(a.success);
  CHECK(harness::report_csv(a) == harness::report_csv(b));
  CHECK(harness::meta_text(a) == harness::meta_text(b));
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  for (size_t i = 0; i < a.trajectories.size(); ++i)
    CHECK(trajectory::serialize(a.trajectories[i].second) ==
          trajectory::serialize(b.trajectories[i].second));

  RunOptions other = opts;
  other.seed = 4321;
  const RunReport c = harness::run_mission(world, plan, other);
  CHECK(harness::meta_text(a) != harness::meta_text(c));
}

TEST_CASE("report directories round-trip") {
  RunReport report;
  report.world = "bench";
  report.mission = "demo";
  report.scenario = 0xdeadbeef12345678ull;
  report.seed = 99;
  report.mode = "simulate";
  report.success = true;
  report.virtual_duration = 12.344;
  harness::StepResult s;
  s.index = 1;
  s.label = "move_named:home";
  s.arm = "arm1";
  s.ok = false;
  s.error = "planning failed: no path,\nreally";
  s.t_start = 0.0;
  s.t_end = 1.5;
  s.peak_margin = 0.43;
  s.max_tracking_err = 0.011;
  s.trajectory_file = "traj_01_arm1.csv";
  report.steps.push_back(s);
  report.extra["note"] = "hello";
  report.files.emplace_back("poses.csv", "index\n0\n");

  const auto dir = temp_dir("report");
  harness::write_report(report, dir.string());
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "meta"));
  CHECK(std::filesystem::exists(dir / "poses.csv"));

  const RunReport back = harness::read_report(dir.string());
  CHECK(back.world == "bench");
  CHECK(back.mission == "demo");
  CHECK(back.scenario == report.scenario);
  CHECK(back.seed == 99);
  CHECK(back.success);
  CHECK(back.virtual_duration == doctest::Approx(12.344));
  CHECK(back.extra.at("note") == "hello");
  REQUIRE(back.steps.size() == 1);
  CHECK(back.steps[0].label == "move_named:home");
  CHECK_FALSE(back.steps[0].ok);
  // Commas and newlines in errors were flattened, not quoted.
  CHECK(back.steps[0].error.find(',') == std::string::npos);
  CHECK(back.steps[0].peak_margin == doctest::Approx(0.43));
  CHECK(back.steps[0].trajectory_file == "traj_01_arm1.csv");
  std::filesystem::remove_all(dir);
}

TEST_CASE("perception with zero noise reproduces ground truth exactly") {
  const model::WorldModel world = bench_world();
  scene::Scene scene(world);
  scene.set_config("arm1", world.named_poses.at("lookout"));

  harness::PerceptionConfig cfg;
  cfg.pos_noise = 0;
  cfg.rot_noise = 0;
  harness::PerceptionSim cam("arm1", cfg);
  const auto sample = cam.observe(scene, "cup", 0.0);

  const geometry::Transform t_wc = cam.camera_pose(scene);
  const geometry::Transform t_wo_back =
      geometry::compose(t_wc, sample.pose);
  const geometry::Transform truth = scene.object_pose("cup");
  const auto [derr, aerr] = geometry::pose_distance(t_wo_back, truth);
  CHECK(derr < 1e-12);
  CHECK(aerr < 1e-12);

  CHECK_THROWS_AS((void)cam.observe(scene, "unicorn", 0.0),
                  std::runtime_error);
}

TEST_CASE("perception emits its configured rate and noise statistics") {
  const model::WorldModel world = bench_world();
  scene::Scene scene(world);
  scene.set_config("arm1", world.named_poses.at("lookout"));

  harness::PerceptionConfig cfg;
  cfg.rate_hz = 15.0;
  cfg.pos_noise = 0;
  cfg.rot_noise = 0;
  harness::PerceptionSim cam("arm1", cfg);
  CHECK(cam.poll(scene, 1.0).size() == 15);
  CHECK(cam.poll(scene, 1.0).empty());       // nothing new
  CHECK(cam.poll(scene, 2.0).size() == 15);  // next second

  harness::PerceptionConfig noisy;
  noisy.pos_noise = 0.004;
  noisy.rot_noise = deg_to_rad(2.0);
  noisy.seed = 7;
  harness::PerceptionSim ncam("arm1", noisy);
  const geometry::Transform t_wc = ncam.camera_pose(scene);
  const geometry::Transform truth = geometry::compose(
      geometry::inverse(t_wc), scene.object_pose("cup"));

  const int n = 1000;
  double pos_sq = 0, rot_sq = 0;
  for (int i = 0; i < n; ++i) {
    const auto s = ncam.observe(scene, "cup", 0.0);
    const auto [derr, aerr] = geometry::pose_distance(s.pose, truth);
    pos_sq += derr * derr;
    rot_sq += aerr * aerr;
  }
  // E[|e_pos|^2] = 3 sigma^2 for isotropic Gaussian noise; the angle error
  // is |N(0, sigma)| so E[a^2] = sigma^2.
  const double pos_rms = std::sqrt(pos_sq / n / 3.0);
  const double rot_rms = std::sqrt(rot_sq / n);
  CHECK(pos_rms == doctest::Approx(noisy.pos_noise).epsilon(0.20));
  CHECK(rot_rms == doctest::Approx(noisy.rot_noise).epsilon(0.20));
}

TEST_CASE("payload validation samples the boundary shell and stays in budget") {
  const model::WorldModel world = bench_world();
  harness::PayloadOptions opts;
  opts.mass = 2.27;
  opts.n_poses = 60;
  opts.n_select = 5;
  opts.seed = 2;
  const harness::PayloadResult result =
      harness::validate_payload(world, opts);

  REQUIRE(static_cast<int>(result.poses.size()) == 60);
  const double reach = world.arm("arm1").arm.nominal_reach;
  int selected = 0;
  for (const auto& p : result.poses) {
    CHECK(p.tip_radius >= 0.9 * reach - 1e-9);
    CHECK(p.tip_radius <= reach + 1e-9);
    selected += p.selected ? 1 : 0;
  }
  CHECK(selected == 5);

  // The selected set is exactly the five highest margins.
  std::vector<double> margins;
  for (const auto& p : result.poses) margins.push_back(p.margin);
  std::sort(margins.begin(), margins.end(), std::greater<>());
  for (const auto& p : result.poses) {
    if (p.selected)
      CHECK(p.margin >= margins[4] - 1e-12);
    else
      CHECK(p.margin <= margins[4] + 1e-12);
  }

  // Tour visits each selected pose once.
  CHECK(result.order.size() == 5);
  for (int idx : result.order) CHECK(result.poses[idx].selected);

  CAPTURE(result.report.steps.empty() ? "" : result.report.steps.back().error);
  CHECK(result.success);
  CHECK(result.collision_free);
  CHECK(result.peak_execution_margin < 1.0);
  CHECK(result.peak_execution_margin > 0.0);

  // Without the payload every static margin drops.
  const auto& spec = world.arm("arm1").arm;
  for (const auto& p : result.poses) {
    const double bare = dynamics::torque_margin(
        spec, dynamics::gravity_torques(spec, p.q, 0.0));
    CHECK(bare < p.margin);
  }

  // The report carries the full sample table.
  bool has_table = false;
  for (const auto& [name, content] : result.report.files)
    if (name == "poses.csv")
      has_table = 61 == std::count(content.begin(), content.end(), '\n');
  CHECK(has_table);
}

TEST_CASE("payload validation reports when the shell cannot be sampled") {
  model::WorldModel world = bench_world();
  harness::PayloadOptions opts;
  opts.n_poses = 10;
  opts.n_select = 2;
  opts.shell = 0.0001;  // sliver of the reach sphere, practically empty
  CHECK_THROWS_AS((void)harness::validate_payload(world, opts),
                  harness::InsufficientSamples);

  harness::PayloadOptions bad;
  bad.n_poses = 5;
  bad.n_select = 9;
  CHECK_THROWS_AS((void)harness::validate_payload(world, bad),
                  std::invalid_argument);
}
