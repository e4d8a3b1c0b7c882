#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::trajectory {

struct TrajectoryPoint {
  double t = 0;  // s, from trajectory start
  Joints q = Joints::Zero();
  Joints qdot = Joints::Zero();
};

struct Trajectory {
  std::string arm;
  std::uint64_t seed = 0;
  std::uint64_t scenario = 0;  // digest of the world it was planned in
  std::vector<TrajectoryPoint> points;  // strictly increasing t, first at 0

  double duration() const;
  Joints sample(double t) const;           // linear interpolation, clamped
  Joints sample_velocity(double t) const;  // piecewise linear, clamped
};

/// Time-parameterizes a joint-space path with per-segment trapezoidal speed
/// profiles that stop at every waypoint. Joint speed limits come from the arm
/// model; `max_accel` (rad/s^2) caps every joint's acceleration.
/// `speed_scale` in (0, 1] derates the speed limits.
Trajectory time_parameterize(const std::vector<Joints>& path,
                             const model::ArmModel& arm, double max_accel,
                             double speed_scale = 1.0);

/// True when consecutive samples never exceed joint speed limits (checked at
/// the given probe spacing) and the profile starts and ends at rest.
bool velocity_bounded(const Trajectory& traj, const model::ArmModel& arm,
                      double probe_dt, double slack = 1.001);

std::string serialize(const Trajectory& traj);
Trajectory parse(const std::string& text);
void save(const Trajectory& traj, const std::string& path);
Trajectory load(const std::string& path);

}  // namespace armstack::trajectory
