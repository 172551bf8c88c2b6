#pragma once

// Independent reference implementations used to validate analytic results.

#include <algorithm>

#include "kcac/geometry.hpp"
#include "kcac/rng.hpp"

namespace kcac::test {

// Volumetric IoU estimated by classifying a regular grid of cell centers
// spanning the union bounding box. Deliberately knows nothing about the
// closed-form interval arithmetic it checks.
inline double voxel_iou(const AlignedBox& a, const AlignedBox& b, int n = 100) {
  double lo[3], hi[3];
  for (int axis = 0; axis < 3; ++axis) {
    lo[axis] = std::min(a.min(axis), b.min(axis));
    hi[axis] = std::max(a.max(axis), b.max(axis));
  }
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < n; ++i) {
    double x = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      double y = lo[1] + (hi[1] - lo[1]) * (j + 0.5) / n;
      for (int k = 0; k < n; ++k) {
        double z = lo[2] + (hi[2] - lo[2]) * (k + 0.5) / n;
        Vec3 p{x, y, z};
        bool pa = a.contains(p);
        bool pb = b.contains(p);
        in_a += pa;
        in_b += pb;
        in_both += pa && pb;
      }
    }
  }
  long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : double(in_both) / double(uni);
}

// Box pairs that overlap often but not always.
inline AlignedBox random_box(RandomStream& rng) {
  Vec3 c{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
  Vec3 h{rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)};
  return {c, h};
}

inline AlignedBox nearby_box(const AlignedBox& base, RandomStream& rng) {
  AlignedBox b = random_box(rng);
  for (int axis = 0; axis < 3; ++axis) {
    double span = base.h(axis) + b.h(axis);
    double off = rng.uniform(-1.4, 1.4) * span;
    double c = base.c(axis) + off;
    if (axis == 0) b.center.x = c;
    if (axis == 1) b.center.y = c;
    if (axis == 2) b.center.z = c;
  }
  return b;
}

}  // namespace kcac::test
