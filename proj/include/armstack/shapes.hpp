#pragma once

#include <string>

#include <Eigen/Core>

#include "armstack/geometry.hpp"

namespace armstack {

enum class ShapeKind { kSphere, kCapsule, kBox };

/// Convex collision primitive expressed in its own local frame.
/// Sphere: center at origin, radius `radius`.
/// Capsule: segment from (0,0,-half_length) to (0,0,+half_length) along local
/// z, radius `radius`.
/// Box: axis-aligned in the local frame with half extents `half_extents`.
struct Shape {
  ShapeKind kind = ShapeKind::kSphere;
  double radius = 0.0;
  double half_length = 0.0;
  Eigen::Vector3d half_extents{0, 0, 0};

  static Shape sphere(double radius);
  static Shape capsule(double radius, double half_length);
  static Shape box(const Eigen::Vector3d& half_extents);

  /// Returns a copy grown outward by `margin` on every surface.
  Shape inflated(double margin) const;

  /// Radius of the smallest origin-centered bounding sphere.
  double bounding_radius() const;
};

/// Shape plus the transform placing it (local frame in some reference frame).
struct PlacedShape {
  Shape shape;
  geometry::Transform pose;
};

/// Shape with a stable name, used for environment geometry.
struct NamedShape {
  std::string name;
  Shape shape;
  geometry::Transform pose;
};

/// Capsule whose segment runs from `a` to `b` (frame of the caller).
PlacedShape capsule_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            double radius);

}  // namespace armstack
