#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "armstack/model.hpp"
#include "armstack/trajectory.hpp"
#include "armstack/types.hpp"

namespace armstack::control {

inline constexpr double kDefaultPeriod = 0.008;  // s, 125 ticks per second
inline constexpr double kEncoderQuantum = deg_to_rad(0.088);
inline constexpr double kServoGain = 40.0;  // 1/s

/// First-order servo model of one joint drive: every step it moves toward
/// the commanded setpoint at a rate gain*(error), clipped to the joint speed
/// limit. Setpoints are clamped to the joint limits at this boundary, so no
/// upstream bug can push the joint outside its range. Readback is quantized
/// to the encoder resolution.
class MotorSim {
 public:
  MotorSim(double limit_lo, double limit_hi, double max_speed,
           double initial = 0.0, double gain = kServoGain,
           double quantum = kEncoderQuantum);

  void command(double setpoint);
  void step(double dt);

  double setpoint() const { return setpoint_; }
  double encoder() const;
  double position() const { return position_; }  // unquantized, tests only

 private:
  double lo_, hi_, max_speed_, gain_, quantum_;
  double position_;
  double setpoint_;
};

/// Parallel gripper with a travel-limited stroke. An obstruction (the width
/// of an object between the fingers) stops the close motion; holding is
/// reported when the command keeps squeezing against it.
class GripperSim {
 public:
  GripperSim(const model::GripperSpec& spec, double initial_width);

  void command(double width, double effort);
  void set_obstruction(std::optional<double> object_width);
  void step(double dt);

  double width() const { return width_; }
  double target() const { return target_; }
  double effort() const { return effort_; }
  bool holding() const;

 private:
  model::GripperSpec spec_;
  std::optional<double> obstruction_;
  double width_;
  double target_;
  double effort_ = 0.0;
};

enum class ControllerState { kIdle, kTracking, kMoving, kFault, kEstopped };
std::string to_string(ControllerState s);

struct ControlConfig {
  double period = kDefaultPeriod;
  double path_tolerance = deg_to_rad(3.0);
  double goal_tolerance = deg_to_rad(0.5);
};

/// Cyclic joint-space controller for one arm. Owns the simulated drives and
/// advances them one fixed period per tick; nothing here blocks or consults
/// a wall clock.
class ArmController {
 public:
  ArmController(const model::ArmModel& arm, const ControlConfig& config,
                const Joints& initial);

  /// Starts tracking a trajectory. The trajectory must begin within the path
  /// tolerance of the current encoders. `start_time` (virtual seconds,
  /// >= now) delays the start; passing the current time starts immediately.
  bool execute_trajectory(const trajectory::Trajectory& traj,
                          double start_time);
  bool execute_trajectory(const trajectory::Trajectory& traj);

  /// Point-to-point move: slews an internal reference toward the target at
  /// the joint speed limits.
  bool move_to(const Joints& target);

  void command_gripper(double width, double effort);

  /// Freezes every drive at its current encoder reading and latches the
  /// estop state until reset().
  void estop();
  void reset();

  void tick();

  ControllerState state() const { return state_; }
  const std::string& last_error() const { return error_; }
  std::uint64_t ticks() const { return ticks_; }
  double time() const;
  double period() const { return config_.period; }

  Joints encoders() const;
  Joints reference() const { return reference_; }
  Joints setpoints() const;
  bool goal_reached() const;  // true if the last goal completed

  GripperSim& gripper() { return gripper_; }
  const GripperSim& gripper() const { return gripper_; }
  const model::ArmModel& arm() const { return arm_; }

  struct TraceRow {
    std::uint64_t tick;
    ControllerState state;
    Joints reference;
    Joints encoder;
    Joints setpoint;
  };
  void set_trace(bool enabled) { trace_enabled_ = enabled; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  static std::string trace_csv_header();
  std::string trace_csv() const;

 private:
  void fault(const std::string& why);

  model::ArmModel arm_;
  ControlConfig config_;
  std::vector<MotorSim> motors_;
  GripperSim gripper_;
  ControllerState state_ = ControllerState::kIdle;
  std::string error_;
  std::uint64_t ticks_ = 0;

  Joints reference_;
  std::optional<trajectory::Trajectory> active_;
  double traj_start_ = 0;
  Joints move_target_;
  bool goal_reached_ = true;

  bool trace_enabled_ = false;
  std::vector<TraceRow> trace_;
};

/// Steps a set of arm controllers on one shared clock.
class ControllerManager {
 public:
  explicit ControllerManager(const ControlConfig& config = {});

  ArmController& add_arm(const std::string& name, const model::ArmModel& arm,
                         const Joints& initial);
  ArmController& arm(const std::string& name);
  const ArmController& arm(const std::string& name) const;
  std::vector<std::string> arm_names() const;

  void tick();
  void estop_all();
  std::uint64_t ticks() const { return ticks_; }
  double time() const { return static_cast<double>(ticks_) * config_.period; }
  const ControlConfig& config() const { return config_; }

 private:
  ControlConfig config_;
  std::map<std::string, std::unique_ptr<ArmController>> arms_;
  std::vector<ArmController*> order_;
  std::uint64_t ticks_ = 0;
};

}  // namespace armstack::control
