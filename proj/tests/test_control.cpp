#include <cmath>
#include <random>

#include <doctest.h>

#include "armstack/control.hpp"
#include "oracles.hpp"

using namespace armstack;
using control::ArmController;
using control::ControllerState;
using model::ArmVariant;

namespace {

ArmController make_controller(const Joints& q0 = Joints::Zero()) {
  return ArmController(model::build_arm(ArmVariant::kShort),
                       control::ControlConfig{}, q0);
}

trajectory::Trajectory joint1_move(double to_rad) {
  const auto arm = model::build_arm(ArmVariant::kShort);
  Joints goal = Joints::Zero();
  goal[0] = to_rad;
  return trajectory::time_parameterize({Joints::Zero(), goal}, arm,
                                       deg_to_rad(300));
}

}  // namespace

TEST_CASE("the virtual clock counts 125 ticks per second") {
  auto c = make_controller();
  for (int i = 0; i < 125; ++i) c.tick();
  CHECK(c.ticks() == 125);
  CHECK(c.time() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.period() == doctest::Approx(0.008));
}

TEST_CASE("trajectory tracking stays inside the path tolerance") {
  auto c = make_controller();
  const auto traj = joint1_move(1.2);
  REQUIRE(c.execute_trajectory(traj));
  CHECK(c.state() == ControllerState::kTracking);

  double worst = 0;
  int guard = 0;
  while (c.state() == ControllerState::kTracking && ++guard < 10000) {
    c.tick();
    worst = std::max(worst,
                     (c.encoders() - c.reference()).cwiseAbs().maxCoeff());
  }
  CHECK(c.state() == ControllerState::kIdle);
  CHECK(c.goal_reached());
  // Velocity feedforward keeps lag far below the 3 degree abort threshold.
  CHECK(worst < deg_to_rad(1.0));
  CHECK(std::abs(c.encoders()[0] - 1.2) < deg_to_rad(0.5));
}

TEST_CASE("point to point moves settle just after the slew completes") {
  auto c = make_controller();
  Joints target = Joints::Zero();
  target[0] = 0.5;
  REQUIRE(c.move_to(target));
  // Slew time at the joint1 speed limit, plus a short settle window.
  const int slew_ticks = static_cast<int>(
      std::ceil(0.5 / deg_to_rad(174.0) / control::kDefaultPeriod));
  int used = 0;
  while (c.state() == ControllerState::kMoving) {
    c.tick();
    ++used;
    REQUIRE(used < 1000);
  }
  CHECK(c.goal_reached());
  CHECK(used <= slew_ticks + 4);
  CHECK(std::abs(c.encoders()[0] - 0.5) <= deg_to_rad(0.5));
}

TEST_CASE("setpoints are clamped at the hardware boundary") {
  auto c = make_controller();
  Joints target = Joints::Zero();
  target[1] = deg_to_rad(150);  // beyond the +115 degree stop
  REQUIRE(c.move_to(target));
  for (int i = 0; i < 400; ++i) c.tick();
  const auto arm = model::build_arm(ArmVariant::kShort);
  CHECK(c.encoders()[1] <= arm.joints[1].limit_hi + control::kEncoderQuantum);
  CHECK(c.state() == ControllerState::kIdle);
}

TEST_CASE("raw motor commands cannot escape the limits") {
  const auto arm = model::build_arm(ArmVariant::kShort);
  const auto& j2 = arm.joints[1];
  control::MotorSim motor(j2.limit_lo, j2.limit_hi, j2.max_speed);
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> cmd(-2.5 * kPi, 2.5 * kPi);
  for (int i = 0; i < 20000; ++i) {
    motor.command(cmd(rng));
    motor.step(control::kDefaultPeriod);
    REQUIRE(motor.position() >= j2.limit_lo - 1e-12);
    REQUIRE(motor.position() <= j2.limit_hi + 1e-12);
    REQUIRE(motor.encoder() >= j2.limit_lo - control::kEncoderQuantum);
    REQUIRE(motor.encoder() <= j2.limit_hi + control::kEncoderQuantum);
  }
}

TEST_CASE("encoders quantize to the configured resolution") {
  auto c = make_controller();
  Joints target = Joints::Zero();
  target[0] = 0.1;
  c.move_to(target);
  for (int i = 0; i < 50; ++i) c.tick();
  const double reading = c.encoders()[0];
  const double steps = reading / control::kEncoderQuantum;
  CHECK(std::abs(steps - std::round(steps)) < 1e-9);
}

TEST_CASE("estop freezes motion and latches until reset") {
  auto c = make_controller();
  const auto traj = joint1_move(1.5);
  REQUIRE(c.execute_trajectory(traj));
  for (int i = 0; i < 40; ++i) c.tick();
  REQUIRE(c.state() == ControllerState::kTracking);

  c.estop();
  CHECK(c.state() == ControllerState::kEstopped);
  const Joints frozen = c.encoders();
  for (int i = 0; i < 200; ++i) c.tick();
  CHECK((c.encoders() - frozen).cwiseAbs().maxCoeff() <=
        control::kEncoderQuantum);

  // Commands are refused while latched.
  CHECK_FALSE(c.execute_trajectory(traj));
  Joints t2 = Joints::Zero();
  CHECK_FALSE(c.move_to(t2));
  CHECK(c.last_error().find("reset") != std::string::npos);

  c.reset();
  CHECK(c.state() == ControllerState::kIdle);
  CHECK(c.move_to(t2));
  int guard = 0;
  while (c.state() == ControllerState::kMoving && ++guard < 2000) c.tick();
  CHECK(c.goal_reached());
}

TEST_CASE("a reference jump beyond the path tolerance faults the arm") {
  auto c = make_controller();
  trajectory::Trajectory traj;
  trajectory::TrajectoryPoint p0, p1, p2;
  p1.t = 0.1;
  p2.t = 0.108;
  p2.q[0] = deg_to_rad(10);  // 10 degrees in one tick
  traj.points = {p0, p1, p2};
  REQUIRE(c.execute_trajectory(traj));
  for (int i = 0; i < 30 && c.state() != ControllerState::kFault; ++i)
    c.tick();
  CHECK(c.state() == ControllerState::kFault);
  CHECK(c.last_error().find("path tolerance") != std::string::npos);
  // Fault, like estop, requires an explicit reset.
  CHECK_FALSE(c.move_to(Joints::Zero()));
  c.reset();
  CHECK(c.state() == ControllerState::kIdle);
}

TEST_CASE("trajectories must start where the arm currently is") {
  auto c = make_controller();
  const auto offset = joint1_move(1.0);
  trajectory::Trajectory shifted = offset;
  for (auto& p : shifted.points) p.q[0] += deg_to_rad(20);
  CHECK_FALSE(c.execute_trajectory(shifted));
  CHECK(c.last_error().find("start") != std::string::npos);
}

TEST_CASE("deferred start times hold position then track") {
  auto c = make_controller();
  const auto traj = joint1_move(0.8);
  REQUIRE(c.execute_trajectory(traj, 0.2));  // start a quarter second out
  for (int i = 0; i < 20; ++i) c.tick();     // 0.16 s: still waiting
  CHECK(c.encoders().cwiseAbs().maxCoeff() <= control::kEncoderQuantum);
  int guard = 0;
  while (c.state() == ControllerState::kTracking && ++guard < 5000) c.tick();
  CHECK(c.goal_reached());
  CHECK(std::abs(c.encoders()[0] - 0.8) <= deg_to_rad(0.5));
}

TEST_CASE("gripper closes onto an object and reports the grasp") {
  auto c = make_controller();
  auto& g = c.gripper();
  CHECK(g.width() == doctest::Approx(0.108));

  g.set_obstruction(0.040);
  c.command_gripper(0.0, 0.8);
  for (int i = 0; i < 200; ++i) c.tick();
  CHECK(g.width() == doctest::Approx(0.040));
  CHECK(g.holding());

  // Opening releases the object.
  c.command_gripper(0.09, 0.8);
  for (int i = 0; i < 200; ++i) c.tick();
  CHECK(g.width() == doctest::Approx(0.09));
  CHECK_FALSE(g.holding());

  // Closing on nothing bottoms out without a hold.
  g.set_obstruction(std::nullopt);
  c.command_gripper(0.0, 0.8);
  for (int i = 0; i < 200; ++i) c.tick();
  CHECK(g.width() == doctest::Approx(0.0));
  CHECK_FALSE(g.holding());
}

TEST_CASE("per tick trace captures reference, encoder and command") {
  auto c = make_controller();
  c.set_trace(true);
  const auto traj = joint1_move(0.3);
  REQUIRE(c.execute_trajectory(traj));
  for (int i = 0; i < 50; ++i) c.tick();
  CHECK(c.trace().size() == 50);
  const std::string csv = c.trace_csv();
  CHECK(csv.find("tick,t,state") == 0);
  CHECK(csv.find("tracking") != std::string::npos);
  // Header plus one line per tick.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
}

TEST_CASE("identical command sequences give identical traces") {
  auto run = [] {
    auto c = make_controller();
    c.set_trace(true);
    const auto traj = joint1_move(0.9);
    c.execute_trajectory(traj);
    for (int i = 0; i < 300; ++i) c.tick();
    Joints t = Joints::Zero();
    t[3] = -0.7;
    c.move_to(t);
    for (int i = 0; i < 300; ++i) c.tick();
    return c.trace_csv();
  };
  CHECK(run() == run());
}

TEST_CASE("the manager ticks every arm on one clock") {
  control::ControllerManager mgr;
  const auto arm = model::build_arm(ArmVariant::kShort);
  auto& a = mgr.add_arm("arm1", arm, Joints::Zero());
  auto& b = mgr.add_arm("arm2", arm, Joints::Zero());
  Joints t = Joints::Zero();
  t[0] = 0.4;
  a.move_to(t);
  b.move_to(t);
  for (int i = 0; i < 300; ++i) mgr.tick();
  CHECK(mgr.ticks() == 300);
  CHECK(a.ticks() == 300);
  CHECK(b.ticks() == 300);
  CHECK(a.goal_reached());
  CHECK(b.goal_reached());

  mgr.estop_all();
  CHECK(mgr.arm("arm1").state() == ControllerState::kEstopped);
  CHECK(mgr.arm("arm2").state() == ControllerState::kEstopped);
  CHECK(mgr.arm_names().size() == 2);
}
