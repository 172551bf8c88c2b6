#include <doctest.h>

#include "kcac/geometry.hpp"
#include "oracles.hpp"

using namespace kcac;

TEST_CASE("box overlap of identical boxes is exactly 1") {
  AlignedBox b = make_cube({0.1, -0.2, 0.3}, 0.065);
  CHECK(goal_overlap(b, b) == 1.0);
}

TEST_CASE("box overlap of disjoint boxes is exactly 0") {
  AlignedBox a = make_cube({0.0, 0.0, 0.0}, 0.1);
  AlignedBox b = make_cube({1.0, 0.0, 0.0}, 0.1);
  CHECK(goal_overlap(a, b) == 0.0);
  // Touching faces still count as zero volume.
  AlignedBox c = make_cube({0.1, 0.0, 0.0}, 0.1);
  CHECK(goal_overlap(a, c) == 0.0);
}

TEST_CASE("box overlap of a half-shifted cube is 1/3") {
  // Unit cubes offset by half an edge: intersection 0.5, union 1.5.
  AlignedBox a = make_cube({0.0, 0.0, 0.0}, 1.0);
  AlignedBox b = make_cube({0.5, 0.0, 0.0}, 1.0);
  CHECK(goal_overlap(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("box overlap matches the voxel-grid estimate") {
  RandomStream rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    AlignedBox a = test::random_box(rng);
    AlignedBox b = test::nearby_box(a, rng);
    double exact = goal_overlap(a, b);
    double approx = test::voxel_iou(a, b, 64);
    CHECK(std::abs(exact - approx) <= 0.015);
  }
}

TEST_CASE("box overlap is symmetric, bounded, and 1 only for identity") {
  RandomStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    AlignedBox a = test::random_box(rng);
    AlignedBox b = test::nearby_box(a, rng);
    double ab = goal_overlap(a, b);
    CHECK(ab == goal_overlap(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (!(a == b)) CHECK(ab < 1.0);
  }
}

TEST_CASE("degenerate boxes are rejected") {
  AlignedBox ok = make_cube({0, 0, 0}, 1.0);
  AlignedBox flat{{0, 0, 0}, {0.5, 0.0, 0.5}};
  CHECK_THROWS_AS(goal_overlap(ok, flat), GeometryError);
  CHECK_THROWS_AS(make_cube({0, 0, 0}, 0.0), GeometryError);
  CHECK_THROWS_AS(make_cube({0, 0, 0}, -1.0), GeometryError);
}

TEST_CASE("distance helpers") {
  Vec3 a{1.0, 2.0, 3.0}, b{1.0, 2.0, 3.0};
  CHECK(distance(a, b) == 0.0);
  CHECK(distance(Vec3{0, 3, 4}, Vec3{0, 0, 0}) == doctest::Approx(5.0));
  CHECK(distance_xy(Vec3{3, 4, 100}, Vec3{0, 0, -50}) == doctest::Approx(5.0));
}
