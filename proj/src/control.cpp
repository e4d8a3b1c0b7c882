#include "armstack/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace armstack::control {

MotorSim::MotorSim(double limit_lo, double limit_hi, double max_speed,
                   double initial, double gain, double quantum)
    : lo_(limit_lo),
      hi_(limit_hi),
      max_speed_(max_speed),
      gain_(gain),
      quantum_(quantum),
      position_(std::clamp(initial, limit_lo, limit_hi)),
      setpoint_(position_) {}

void MotorSim::command(double setpoint) {
  setpoint_ = std::clamp(setpoint, lo_, hi_);
}

void MotorSim::step(double dt) {
  const double v =
      std::clamp(gain_ * (setpoint_ - position_), -max_speed_, max_speed_);
  position_ += v * dt;
}

double MotorSim::encoder() const {
  return std::round(position_ / quantum_) * quantum_;
}

GripperSim::GripperSim(const model::GripperSpec& spec, double initial_width)
    : spec_(spec),
      width_(std::clamp(initial_width, spec.stroke_min, spec.stroke_max)),
      target_(width_) {}

void GripperSim::command(double width, double effort) {
  target_ = std::clamp(width, spec_.stroke_min, spec_.stroke_max);
  effort_ = std::clamp(effort, 0.0, spec_.max_effort);
}

void GripperSim::set_obstruction(std::optional<double> object_width) {
  obstruction_ = object_width;
}

void GripperSim::step(double dt) {
  double goal = target_;
  if (obstruction_) {
    const double floor =
        std::clamp(*obstruction_, spec_.stroke_min, spec_.stroke_max);
    // An object between the fingers stops the close motion at its width.
    if (goal < floor && width_ >= floor - 1e-12) goal = floor;
  }
  width_ +=
      std::clamp(goal - width_, -spec_.max_speed * dt, spec_.max_speed * dt);
}

bool GripperSim::holding() const {
  if (!obstruction_ || effort_ <= 0.0) return false;
  // Squeezing: the fingers rest on the object while commanded tighter.
  return target_ < *obstruction_ - 1e-9 &&
         std::abs(width_ - *obstruction_) < 1e-6;
}

std::string to_string(ControllerState s) {
  switch (s) {
    case ControllerState::kIdle: return "idle";
    case ControllerState::kTracking: return "tracking";
    case ControllerState::kMoving: return "moving";
    case ControllerState::kFault: return "fault";
    case ControllerState::kEstopped: return "estopped";
  }
  return "?";
}

ArmController::ArmController(const model::ArmModel& arm,
                             const ControlConfig& config,
                             const Joints& initial)
    : arm_(arm), config_(config), gripper_(arm.gripper, arm.gripper.stroke_max) {
  const Joints q0 = model::clamp_to_limits(arm_, initial);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& j = arm_.joints[i];
    motors_.emplace_back(j.limit_lo, j.limit_hi, j.max_speed, q0[i]);
  }
  reference_ = q0;
  move_target_ = q0;
}

double ArmController::time() const {
  return static_cast<double>(ticks_) * config_.period;
}

Joints ArmController::encoders() const {
  Joints q;
  for (int i = 0; i < kNumJoints; ++i) q[i] = motors_[i].encoder();
  return q;
}

Joints ArmController::setpoints() const {
  Joints q;
  for (int i = 0; i < kNumJoints; ++i) q[i] = motors_[i].setpoint();
  return q;
}

bool ArmController::goal_reached() const { return goal_reached_; }

bool ArmController::execute_trajectory(const trajectory::Trajectory& traj,
                                       double start_time) {
  if (state_ == ControllerState::kEstopped ||
      state_ == ControllerState::kFault) {
    error_ = "controller requires reset";
    return false;
  }
  if (traj.points.empty()) {
    error_ = "empty trajectory";
    return false;
  }
  if (start_time < time() - 1e-9) {
    error_ = "start time already passed";
    return false;
  }
  const Joints first = traj.points.front().q;
  if (((first - encoders()).cwiseAbs().maxCoeff()) > config_.path_tolerance) {
    error_ = "trajectory does not start at the current configuration";
    return false;
  }
  active_ = traj;
  traj_start_ = start_time;
  state_ = ControllerState::kTracking;
  goal_reached_ = false;
  error_.clear();
  return true;
}

bool ArmController::execute_trajectory(const trajectory::Trajectory& traj) {
  return execute_trajectory(traj, time());
}

bool ArmController::move_to(const Joints& target) {
  if (state_ == ControllerState::kEstopped ||
      state_ == ControllerState::kFault) {
    error_ = "controller requires reset";
    return false;
  }
  move_target_ = model::clamp_to_limits(arm_, target);
  reference_ = encoders();
  active_.reset();
  state_ = ControllerState::kMoving;
  goal_reached_ = false;
  error_.clear();
  return true;
}

void ArmController::command_gripper(double width, double effort) {
  if (state_ == ControllerState::kEstopped) return;
  gripper_.command(width, effort);
}

void ArmController::estop() {
  state_ = ControllerState::kEstopped;
  active_.reset();
  goal_reached_ = false;
  const Joints hold = encoders();
  for (int i = 0; i < kNumJoints; ++i) motors_[i].command(hold[i]);
  reference_ = hold;
  gripper_.command(gripper_.width(), 0.0);
  error_ = "emergency stop";
}

void ArmController::reset() {
  if (state_ == ControllerState::kEstopped ||
      state_ == ControllerState::kFault) {
    state_ = ControllerState::kIdle;
    reference_ = encoders();
    move_target_ = reference_;
    active_.reset();
    error_.clear();
  }
}

void ArmController::fault(const std::string& why) {
  state_ = ControllerState::kFault;
  active_.reset();
  goal_reached_ = false;
  const Joints hold = encoders();
  for (int i = 0; i < kNumJoints; ++i) motors_[i].command(hold[i]);
  reference_ = hold;
  error_ = why;
}

void ArmController::tick() {
  const double dt = config_.period;
  const double now_end = time() + dt;

  if (state_ == ControllerState::kTracking && active_) {
    const double rel_end = now_end - traj_start_;
    if (rel_end >= 0.0) {
      // Feedforward from the current sample lands the first order motor on
      // the next sample; supervision compares encoders against that target.
      const double rel_now = std::max(time() - traj_start_, 0.0);
      const Joints ref = active_->sample(rel_now);
      const Joints vel = active_->sample_velocity(rel_now);
      for (int i = 0; i < kNumJoints; ++i)
        motors_[i].command(ref[i] + vel[i] / kServoGain);
      reference_ = active_->sample(rel_end);
    }
  } else if (state_ == ControllerState::kMoving) {
    for (int i = 0; i < kNumJoints; ++i) {
      const double step =
          std::clamp(move_target_[i] - reference_[i],
                     -arm_.joints[i].max_speed * dt,
                     arm_.joints[i].max_speed * dt);
      motors_[i].command(reference_[i] + (step / dt) / kServoGain);
      reference_[i] += step;
    }
  }

  for (auto& m : motors_) m.step(dt);
  gripper_.step(dt);
  ++ticks_;

  const Joints enc = encoders();
  if (state_ == ControllerState::kTracking ||
      state_ == ControllerState::kMoving) {
    const double err = (enc - reference_).cwiseAbs().maxCoeff();
    if (err > config_.path_tolerance) {
      fault("path tolerance exceeded");
    }
  }

  if (state_ == ControllerState::kTracking && active_ &&
      now_end - traj_start_ >= active_->duration()) {
    const Joints goal = active_->points.back().q;
    if ((enc - goal).cwiseAbs().maxCoeff() <= config_.goal_tolerance) {
      state_ = ControllerState::kIdle;
      goal_reached_ = true;
      active_.reset();
    } else if (now_end - traj_start_ > active_->duration() + 1.0) {
      fault("goal tolerance not met after trajectory end");
    }
  } else if (state_ == ControllerState::kMoving) {
    if ((reference_ - move_target_).cwiseAbs().maxCoeff() < 1e-12 &&
        (enc - move_target_).cwiseAbs().maxCoeff() <= config_.goal_tolerance) {
      state_ = ControllerState::kIdle;
      goal_reached_ = true;
    }
  }

  if (trace_enabled_) {
    trace_.push_back({ticks_, state_, reference_, enc, setpoints()});
  }
}

std::string ArmController::trace_csv_header() {
  std::string h = "tick,t,state";
  for (const char* kind : {"ref", "enc", "cmd"})
    for (int i = 1; i <= kNumJoints; ++i)
      h += "," + std::string(kind) + std::to_string(i);
  return h + "\n";
}

std::string ArmController::trace_csv() const {
  std::string out = trace_csv_header();
  char buf[64];
  for (const auto& row : trace_) {
    std::snprintf(buf, sizeof(buf), "%llu,%.12g,%s",
                  static_cast<unsigned long long>(row.tick),
                  static_cast<double>(row.tick) * config_.period,
                  to_string(row.state).c_str());
    out += buf;
    for (const Joints* block : {&row.reference, &row.encoder, &row.setpoint}) {
      for (int i = 0; i < kNumJoints; ++i) {
        std::snprintf(buf, sizeof(buf), ",%.12g", (*block)[i]);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

ControllerManager::ControllerManager(const ControlConfig& config)
    : config_(config) {}

ArmController& ControllerManager::add_arm(const std::string& name,
                                          const model::ArmModel& arm,
                                          const Joints& initial) {
  if (arms_.count(name))
    throw std::logic_error("controller already exists for " + name);
  auto controller = std::make_unique<ArmController>(arm, config_, initial);
  ArmController& ref = *controller;
  arms_[name] = std::move(controller);
  order_.push_back(&ref);
  return ref;
}

ArmController& ControllerManager::arm(const std::string& name) {
  auto it = arms_.find(name);
  if (it == arms_.end()) throw std::out_of_range("no controller for " + name);
  return *it->second;
}

const ArmController& ControllerManager::arm(const std::string& name) const {
  auto it = arms_.find(name);
  if (it == arms_.end()) throw std::out_of_range("no controller for " + name);
  return *it->second;
}

std::vector<std::string> ControllerManager::arm_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : arms_) names.push_back(name);
  return names;
}

void ControllerManager::tick() {
  for (ArmController* c : order_) c->tick();
  ++ticks_;
}

void ControllerManager::estop_all() {
  for (ArmController* c : order_) c->estop();
}

}  // namespace armstack::control
