#pragma once

// Procedural formation shapes, centered on the origin. For m = 3 the shape
// lies in the z = 0 plane.

#include "uavswarm/common.hpp"

#include <cmath>
#include <numbers>

namespace uavswarm::shapes {

inline PointSet circle(int n, double radius, int m = 2) {
  PointSet p = PointSet::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    p(i, 0) = radius * std::cos(a);
    p(i, 1) = radius * std::sin(a);
  }
  return p;
}

// Four arms (+x, -x, +y, -y) filled round-robin, `spacing` apart, with the
// center left empty.
inline PointSet cross(int n, double spacing, int m = 2) {
  PointSet p = PointSet::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    const double r = spacing * (i / 4 + 1);
    switch (i % 4) {
      case 0: p(i, 0) = r; break;
      case 1: p(i, 0) = -r; break;
      case 2: p(i, 1) = r; break;
      default: p(i, 1) = -r; break;
    }
  }
  return p;
}

// Row-major grid with `columns` per row, centered.
inline PointSet grid(int n, double spacing, int columns, int m = 2) {
  PointSet p = PointSet::Zero(n, m);
  const int rows = (n + columns - 1) / columns;
  for (int i = 0; i < n; ++i) {
    p(i, 0) = spacing * (i % columns - 0.5 * (columns - 1));
    p(i, 1) = spacing * (i / columns - 0.5 * (rows - 1));
  }
  return p;
}

}  // namespace uavswarm::shapes
