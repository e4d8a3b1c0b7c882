#pragma once

#include <Eigen/Core>

#include "armstack/geometry.hpp"
#include "armstack/shapes.hpp"

namespace armstack::collision {

/// Distance between two placed shapes. Positive values are exact separation
/// distances. Non-positive values mean the shapes touch or overlap; the
/// magnitude is then only an overlap estimate.
double shape_distance(const Shape& a, const geometry::Transform& pose_a,
                      const Shape& b, const geometry::Transform& pose_b);

inline bool shapes_collide(const Shape& a, const geometry::Transform& pose_a,
                           const Shape& b, const geometry::Transform& pose_b) {
  return shape_distance(a, pose_a, b, pose_b) <= 0.0;
}

// Low-level helpers, exposed for tests.
double point_segment_distance(const Eigen::Vector3d& p,
                              const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b);
double segment_segment_distance(const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& q1,
                                const Eigen::Vector3d& p2,
                                const Eigen::Vector3d& q2);
/// Distance from a point to a solid box (0 inside), box frame.
double point_box_distance(const Eigen::Vector3d& p,
                          const Eigen::Vector3d& half);

}  // namespace armstack::collision
