#include <cmath>
#include <random>

#include <doctest.h>

#include "armstack/geometry.hpp"
#include "oracles.hpp"

using namespace armstack;
using geometry::Transform;

TEST_CASE("compose with identity is a no-op") {
  std::mt19937_64 rng(11);
  const Transform t = oracles::random_transform(rng);
  const Transform a = geometry::compose(t, Transform::identity());
  const Transform b = geometry::compose(Transform::identity(), t);
  CHECK(oracles::matrix_gap(oracles::to_matrix(a), oracles::to_matrix(t)) <
        1e-15);
  CHECK(oracles::matrix_gap(oracles::to_matrix(b), oracles::to_matrix(t)) <
        1e-15);
}

TEST_CASE("rotation about z then translation moves a point as expected") {
  // Rotating (1,0,0) by 90 degrees about z gives (0,1,0).
  const Transform t = Transform::rot_z(kPi / 2);
  const Eigen::Vector3d p = t.apply({1, 0, 0});
  CHECK(p.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-12));

  const Transform moved =
      geometry::compose(Transform::translate(1, 2, 3), Transform::rot_z(kPi));
  const Eigen::Vector3d q = moved.apply({1, 0, 0});
  CHECK(q.x() == doctest::Approx(0.0));
  CHECK(q.y() == doctest::Approx(2.0));
  CHECK(q.z() == doctest::Approx(3.0));
}

TEST_CASE("inverse of a pure translation negates it") {
  const Transform inv = geometry::inverse(Transform::translate(1, 2, 3));
  CHECK(inv.translation.isApprox(Eigen::Vector3d(-1, -2, -3), 1e-15));
  CHECK(inv.rotation.w() == doctest::Approx(1.0));
}

TEST_CASE("pose distance separates translation and rotation") {
  const auto [d_pos, d_rot] =
      geometry::pose_distance(Transform::identity(), Transform::rot_z(kPi));
  CHECK(d_pos == doctest::Approx(0.0));
  CHECK(d_rot == doctest::Approx(kPi));

  const auto [d2_pos, d2_rot] = geometry::pose_distance(
      Transform::translate(0, 0, 1), Transform::translate(0, 0, 3));
  CHECK(d2_pos == doctest::Approx(2.0));
  CHECK(d2_rot == doctest::Approx(0.0));
}

TEST_CASE("compose and inverse agree with homogeneous matrices") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    const Transform a = oracles::random_transform(rng);
    const Transform b = oracles::random_transform(rng);
    const Eigen::Matrix4d ref = oracles::to_matrix(a) * oracles::to_matrix(b);
    CHECK(oracles::matrix_gap(oracles::to_matrix(geometry::compose(a, b)),
                              ref) < 1e-9);
    const Eigen::Matrix4d inv_ref = oracles::to_matrix(a).inverse();
    CHECK(oracles::matrix_gap(oracles::to_matrix(geometry::inverse(a)),
                              inv_ref) < 1e-9);
  }
}

TEST_CASE("composition is associative") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Transform a = oracles::random_transform(rng);
    const Transform b = oracles::random_transform(rng);
    const Transform c = oracles::random_transform(rng);
    const Transform ab_c = geometry::compose(geometry::compose(a, b), c);
    const Transform a_bc = geometry::compose(a, geometry::compose(b, c));
    CHECK(oracles::matrix_gap(oracles::to_matrix(ab_c),
                              oracles::to_matrix(a_bc)) < 1e-9);
  }
}

TEST_CASE("double inverse returns the original transform") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Transform t = oracles::random_transform(rng);
    const Transform back = geometry::inverse(geometry::inverse(t));
    CHECK(oracles::matrix_gap(oracles::to_matrix(back),
                              oracles::to_matrix(t)) < 1e-12);
  }
}

TEST_CASE("quaternions stay unit length and canonical through long chains") {
  std::mt19937_64 rng(3);
  Transform acc = Transform::identity();
  for (int i = 0; i < 5000; ++i)
    acc = geometry::compose(acc, oracles::random_transform(rng));
  CHECK(std::abs(acc.rotation.norm() - 1.0) < 1e-12);
  CHECK(acc.rotation.w() >= 0.0);
}

TEST_CASE("world object pose re-projects through a mounted base") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const Transform t_wb = oracles::random_transform(rng);
    const Transform t_wo = oracles::random_transform(rng);
    const Transform t_bo = geometry::object_in_base(t_wb, t_wo);
    // Mapping the object pose back through the base recovers the world pose.
    const Eigen::Matrix4d rebuilt =
        oracles::to_matrix(t_wb) * oracles::to_matrix(t_bo);
    CHECK(oracles::matrix_gap(rebuilt, oracles::to_matrix(t_wo)) < 1e-9);
  }
}

TEST_CASE("camera detections compose into base-frame goals") {
  std::mt19937_64 rng(22);
  const Transform t_bc = oracles::random_transform(rng);
  const Transform t_co = oracles::random_transform(rng);
  const Transform goal = geometry::goal_from_camera(t_bc, t_co);
  CHECK(oracles::matrix_gap(oracles::to_matrix(goal),
                            oracles::to_matrix(t_bc) * oracles::to_matrix(t_co))
        < 1e-12);
}

TEST_CASE("pose fields round-trip in both encodings") {
  std::mt19937_64 rng(31);
  const Transform t = oracles::random_transform(rng);

  const auto fields7 = geometry::pose_to_fields(t);
  REQUIRE(fields7.size() == 7);
  const Transform back7 = geometry::pose_from_fields(fields7);
  CHECK(oracles::matrix_gap(oracles::to_matrix(back7), oracles::to_matrix(t)) <
        1e-12);

  // Roll-pitch-yaw encoding: yaw about z, then pitch about y, then roll
  // about x, all radians.
  const std::vector<double> fields6 = {0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  const Transform t6 = geometry::pose_from_fields(fields6);
  const Eigen::Matrix3d ref =
      (Eigen::AngleAxisd(0.6, Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(-0.5, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  CHECK((t6.rotation.toRotationMatrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t6.translation.isApprox(Eigen::Vector3d(0.1, -0.2, 0.3)));

  CHECK_THROWS_AS((void)geometry::pose_from_fields(std::vector<double>{1, 2}),
                  std::invalid_argument);
}
