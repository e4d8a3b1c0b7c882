#include "armstack/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Geometry>

namespace armstack::collision {

using Eigen::Vector3d;
using geometry::Transform;

double point_segment_distance(const Vector3d& p, const Vector3d& a,
                              const Vector3d& b) {
  const Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double segment_segment_distance(const Vector3d& p1, const Vector3d& q1,
                                const Vector3d& p2, const Vector3d& q2) {
  // Closest points between segments p1q1 and p2q2 (Ericson, Real-Time
  // Collision Detection, 5.1.9).
  const Vector3d d1 = q1 - p1;
  const Vector3d d2 = q2 - p2;
  const Vector3d r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s, t;
  if (a < 1e-18 && e < 1e-18) {
    return r.norm();
  }
  if (a < 1e-18) {
    s = 0.0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e < 1e-18) {
      t = 0.0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 1e-18 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

double point_box_distance(const Vector3d& p, const Vector3d& half) {
  const Vector3d outside = (p.cwiseAbs() - half).cwiseMax(0.0);
  return outside.norm();
}

namespace {

struct Caps {
  Vector3d a, b;
  double r;
};

Caps capsule_world(const Shape& s, const Transform& pose) {
  const Vector3d axis = pose.rotation * Vector3d(0, 0, s.half_length);
  return {pose.translation - axis, pose.translation + axis, s.radius};
}

// Distance from a world segment to a solid box. The distance-to-box function
// is convex along the segment (distance to a convex set), so a ternary search
// converges to the minimum.
double segment_box_distance(const Vector3d& a, const Vector3d& b,
                            const Transform& box_pose, const Vector3d& half) {
  const Transform inv = geometry::inverse(box_pose);
  const Vector3d la = inv.apply(a);
  const Vector3d lb = inv.apply(b);
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 80; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double f1 = point_box_distance(la + m1 * (lb - la), half);
    const double f2 = point_box_distance(la + m2 * (lb - la), half);
    if (f1 < f2)
      hi = m2;
    else
      lo = m1;
  }
  const double t = 0.5 * (lo + hi);
  const double dmin = std::min({point_box_distance(la, half),
                                point_box_distance(lb, half),
                                point_box_distance(la + t * (lb - la), half)});
  return dmin;
}

// How deep a point is inside the box: negative value is distance to the
// nearest face (box frame), non-negative when outside.
double box_penetration(const Vector3d& p, const Vector3d& half) {
  const Vector3d slack = half - p.cwiseAbs();
  return -slack.minCoeff();
}

struct Obb {
  Eigen::Matrix3d rot;  // box frame -> world
  Vector3d center;
  Vector3d half;
  std::array<Vector3d, 8> verts;   // world
  std::array<std::pair<int, int>, 12> edges;
};

Obb make_obb(const Shape& s, const Transform& pose) {
  Obb o;
  o.rot = pose.rotation.toRotationMatrix();
  o.center = pose.translation;
  o.half = s.half_extents;
  int idx = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        o.verts[idx++] =
            o.center + o.rot * Vector3d(sx * o.half.x(), sy * o.half.y(),
                                        sz * o.half.z());
  // Vertex order above is (x,y,z) sign triples in lexicographic order:
  // index = 4*(sx>0) + 2*(sy>0) + (sz>0).
  o.edges = {{{0, 1}, {2, 3}, {4, 5}, {6, 7},   // along z
              {0, 2}, {1, 3}, {4, 6}, {5, 7},   // along y
              {0, 4}, {1, 5}, {2, 6}, {3, 7}}};  // along x
  return o;
}

// Separating axis test for two boxes. Returns the overlap (negative means a
// separating axis exists and the boxes are apart).
bool obb_overlap(const Obb& a, const Obb& b, double* penetration) {
  std::array<Vector3d, 15> axes;
  int n = 0;
  for (int i = 0; i < 3; ++i) axes[n++] = a.rot.col(i);
  for (int i = 0; i < 3; ++i) axes[n++] = b.rot.col(i);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vector3d cr = a.rot.col(i).cross(b.rot.col(j));
      const double len = cr.norm();
      if (len < 1e-9) continue;
      axes[n++] = cr / len;
    }
  double min_overlap = std::numeric_limits<double>::infinity();
  const Vector3d d = b.center - a.center;
  for (int i = 0; i < n; ++i) {
    const Vector3d& ax = axes[i];
    const double ra = std::abs(ax.dot(a.rot.col(0))) * a.half.x() +
                      std::abs(ax.dot(a.rot.col(1))) * a.half.y() +
                      std::abs(ax.dot(a.rot.col(2))) * a.half.z();
    const double rb = std::abs(ax.dot(b.rot.col(0))) * b.half.x() +
                      std::abs(ax.dot(b.rot.col(1))) * b.half.y() +
                      std::abs(ax.dot(b.rot.col(2))) * b.half.z();
    const double overlap = ra + rb - std::abs(ax.dot(d));
    if (overlap < 0) {
      if (penetration) *penetration = overlap;
      return false;
    }
    min_overlap = std::min(min_overlap, overlap);
  }
  if (penetration) *penetration = min_overlap;
  return true;
}

// Exact distance between two separated boxes: the closest feature pair is
// vertex-vs-box or edge-vs-edge, so enumerating those covers every case.
double obb_distance(const Obb& a, const Obb& b) {
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Matrix3d art = a.rot.transpose();
  const Eigen::Matrix3d brt = b.rot.transpose();
  for (const auto& v : a.verts)
    best = std::min(best, point_box_distance(brt * (v - b.center), b.half));
  for (const auto& v : b.verts)
    best = std::min(best, point_box_distance(art * (v - a.center), a.half));
  for (const auto& [i, j] : a.edges)
    for (const auto& [k, l] : b.edges)
      best = std::min(best, segment_segment_distance(a.verts[i], a.verts[j],
                                                     b.verts[k], b.verts[l]));
  return best;
}

double sphere_like_box(const Vector3d& center, double radius,
                       const Shape& box, const Transform& box_pose) {
  const Vector3d local = geometry::inverse(box_pose).apply(center);
  const double d = point_box_distance(local, box.half_extents);
  if (d > 0.0) return d - radius;
  return box_penetration(local, box.half_extents) - radius;
}

}  // namespace

double shape_distance(const Shape& a, const Transform& pose_a, const Shape& b,
                      const Transform& pose_b) {
  // Normalize order so each kernel handles one kind pairing.
  if (static_cast<int>(a.kind) > static_cast<int>(b.kind))
    return shape_distance(b, pose_b, a, pose_a);

  if (a.kind == ShapeKind::kSphere) {
    if (b.kind == ShapeKind::kSphere) {
      return (pose_a.translation - pose_b.translation).norm() - a.radius -
             b.radius;
    }
    if (b.kind == ShapeKind::kCapsule) {
      const Caps c = capsule_world(b, pose_b);
      return point_segment_distance(pose_a.translation, c.a, c.b) - a.radius -
             c.r;
    }
    return sphere_like_box(pose_a.translation, a.radius, b, pose_b);
  }

  if (a.kind == ShapeKind::kCapsule) {
    const Caps ca = capsule_world(a, pose_a);
    if (b.kind == ShapeKind::kCapsule) {
      const Caps cb = capsule_world(b, pose_b);
      return segment_segment_distance(ca.a, ca.b, cb.a, cb.b) - ca.r - cb.r;
    }
    // Distance to the box as a set is 0 when the segment pierces it, making
    // the result -radius there, which is all the boolean check needs.
    return segment_box_distance(ca.a, ca.b, pose_b, b.half_extents) - ca.r;
  }

  // box vs box
  const Obb oa = make_obb(a, pose_a);
  const Obb ob = make_obb(b, pose_b);
  double penetration = 0;
  if (obb_overlap(oa, ob, &penetration)) return -penetration;
  return obb_distance(oa, ob);
}

}  // namespace armstack::collision
