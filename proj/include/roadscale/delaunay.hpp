#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "roadscale/geometry.hpp"

namespace roadscale {

/// Indices into a point list, counter-clockwise in (u, v).
struct Triangle {
  std::array<std::size_t, 3> idx{};

  std::size_t operator[](std::size_t k) const { return idx[k]; }
};

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
double orient2d(const Vector2d& a, const Vector2d& b, const Vector2d& c);

/// Positive when d lies strictly inside the circumcircle of the counter-clockwise triangle (a, b, c).
double incircle(const Vector2d& a, const Vector2d& b, const Vector2d& c, const Vector2d& d);

/// Bowyer-Watson Delaunay triangulation. Indices refer to `points`; duplicate
/// pixels (within 1e-6 px) are collapsed onto their first occurrence.
/// Throws TooFewPoints (< 3 distinct sites) or AllCollinear.
std::vector<Triangle> delaunay(std::span<const Pixeld> points);

}  // namespace roadscale
