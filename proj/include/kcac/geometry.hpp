#pragma once

#include <algorithm>
#include <cmath>

#include "kcac/error.hpp"

namespace kcac {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double norm_xy() const { return std::sqrt(x * x + y * y); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }
inline double distance_xy(const Vec3& a, const Vec3& b) {
  return (a - b).norm_xy();
}

// Axis-aligned box given by center and per-axis half extents.
struct AlignedBox {
  Vec3 center;
  Vec3 half_extents;

  bool operator==(const AlignedBox&) const = default;

  double min(int axis) const { return c(axis) - h(axis); }
  double max(int axis) const { return c(axis) + h(axis); }
  // Product of rounded side lengths, the same arithmetic the box-box
  // intersection uses. Keeping the two consistent makes the overlap of a box
  // with itself land on exactly 1 instead of a few ulp away.
  double volume() const {
    double v = 1.0;
    for (int axis = 0; axis < 3; ++axis) v *= max(axis) - min(axis);
    return v;
  }
  bool contains(const Vec3& p) const {
    return p.x >= min(0) && p.x <= max(0) && p.y >= min(1) && p.y <= max(1) &&
           p.z >= min(2) && p.z <= max(2);
  }

  double c(int axis) const { return axis == 0 ? center.x : axis == 1 ? center.y : center.z; }
  double h(int axis) const {
    return axis == 0 ? half_extents.x : axis == 1 ? half_extents.y : half_extents.z;
  }
};

inline AlignedBox make_cube(const Vec3& center, double edge) {
  if (!(edge > 0.0) || !std::isfinite(edge)) {
    throw GeometryError("cube edge must be positive and finite");
  }
  double h = edge / 2.0;
  return AlignedBox{center, {h, h, h}};
}

inline void validate_box(const AlignedBox& b, const char* what) {
  if (!b.center.finite() || !b.half_extents.finite() ||
      !(b.half_extents.x > 0.0) || !(b.half_extents.y > 0.0) ||
      !(b.half_extents.z > 0.0)) {
    throw GeometryError(std::string(what) + ": box needs finite center and positive half extents");
  }
}

// Overlap length of two 1-d intervals, zero when disjoint.
inline double overlap_1d(double lo1, double hi1, double lo2, double hi2) {
  return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2));
}

inline double intersection_volume(const AlignedBox& a, const AlignedBox& b) {
  double v = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    v *= overlap_1d(a.min(axis), a.max(axis), b.min(axis), b.max(axis));
  }
  return v;
}

// Intersection over union of two boxes. Exact closed form; symmetric,
// in [0, 1], and 1 only for identical boxes.
inline double goal_overlap(const AlignedBox& a, const AlignedBox& b) {
  validate_box(a, "goal_overlap");
  validate_box(b, "goal_overlap");
  double inter = intersection_volume(a, b);
  double uni = a.volume() + b.volume() - inter;
  return inter / uni;
}

}  // namespace kcac
