#include "armstack/shapes.hpp"

#include <algorithm>
#include <stdexcept>

namespace armstack {

Shape Shape::sphere(double radius) {
  if (radius <= 0) throw std::invalid_argument("sphere radius must be > 0");
  Shape s;
  s.kind = ShapeKind::kSphere;
  s.radius = radius;
  return s;
}

Shape Shape::capsule(double radius, double half_length) {
  if (radius <= 0 || half_length < 0)
    throw std::invalid_argument("capsule needs radius > 0, half_length >= 0");
  Shape s;
  s.kind = ShapeKind::kCapsule;
  s.radius = radius;
  s.half_length = half_length;
  return s;
}

Shape Shape::box(const Eigen::Vector3d& half_extents) {
  if (half_extents.minCoeff() <= 0)
    throw std::invalid_argument("box half extents must be > 0");
  Shape s;
  s.kind = ShapeKind::kBox;
  s.half_extents = half_extents;
  return s;
}

Shape Shape::inflated(double margin) const {
  Shape s = *this;
  switch (kind) {
    case ShapeKind::kSphere:
    case ShapeKind::kCapsule:
      s.radius += margin;
      break;
    case ShapeKind::kBox:
      s.half_extents.array() += margin;
      break;
  }
  return s;
}

PlacedShape capsule_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            double radius) {
  const Eigen::Vector3d d = b - a;
  const double len = d.norm();
  PlacedShape p;
  p.shape = Shape::capsule(radius, 0.5 * len);
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (len > 1e-12)
    q = Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), d / len);
  p.pose = geometry::Transform(q, 0.5 * (a + b));
  return p;
}

double Shape::bounding_radius() const {
  switch (kind) {
    case ShapeKind::kSphere:
      return radius;
    case ShapeKind::kCapsule:
      return half_length + radius;
    case ShapeKind::kBox:
      return half_extents.norm();
  }
  return 0.0;
}

}  // namespace armstack
