#pragma once

#include <wrenchlab/common.hpp>

#include <vector>

namespace wrenchlab {

/* Planar polygon, vertices in counterclockwise order.  The polygons produced
 * here are convex by construction; `convex_ccw` tolerates collinear runs. */
struct Polygon2 {
  std::vector<Vec2> v;

  int size() const { return static_cast<int>(v.size()); }

  double signed_area() const {
    double a = 0;
    int n = size();
    for (int i = 0; i < n; ++i) {
      const Vec2 &p = v[i], &q = v[(i + 1) % n];
      a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
  }

  bool convex_ccw(double tol = 1e-9) const {
    int n = size();
    for (int i = 0; i < n; ++i) {
      Vec2 e1 = v[(i + 1) % n] - v[i];
      Vec2 e2 = v[(i + 2) % n] - v[(i + 1) % n];
      if (e1.x() * e2.y() - e1.y() * e2.x() < -tol) return false;
    }
    return true;
  }

  /* Membership for convex counterclockwise polygons (boundary included). */
  bool contains(const Vec2& p, double tol = 1e-12) const {
    int n = size();
    if (n == 0) return false;
    if (n == 1) return (p - v[0]).norm() <= tol;
    for (int i = 0; i < n; ++i) {
      Vec2 e = v[(i + 1) % n] - v[i];
      Vec2 w = p - v[i];
      if (e.x() * w.y() - e.y() * w.x() < -tol) return false;
    }
    return true;
  }
};

} // namespace wrenchlab
