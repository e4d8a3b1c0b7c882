#pragma once

#include <Eigen/Core>

namespace armstack {

inline constexpr int kNumJoints = 6;

/// Joint-space vector, ordered joint1..joint6, radians.
using Joints = Eigen::Matrix<double, kNumJoints, 1>;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace armstack
