#pragma once

// Filtered geometric predicates: a floating-point evaluation with a forward
// error bound, falling back to exact rational arithmetic when the sign is
// uncertain. Results are exact signs (-1, 0, +1).

namespace genlab::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// +1 if a, b, c turn counter-clockwise, -1 if clockwise, 0 if collinear.
int orient2d(Point2 a, Point2 b, Point2 c);

/// +1 if d lies strictly inside the circle through counter-clockwise a, b, c,
/// -1 if strictly outside, 0 if on it.
int incircle(Point2 a, Point2 b, Point2 c, Point2 d);

}  // namespace genlab::geometry
