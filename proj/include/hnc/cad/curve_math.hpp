#pragma once

#include <optional>
#include <vector>

#include "hnc/cad/model.hpp"

namespace hnc::cad {

struct Vec2 {
  double x = 0;
  double y = 0;
};

struct Circle2 {
  Vec2 center;
  double radius = 0;
};

Vec2 dequantize(const Point& p);

// Circle through three points; nullopt when they are collinear
// (|determinant| below 1e-9).
std::optional<Circle2> circumcircle(const Vec2& a, const Vec2& b, const Vec2& c);

// Center is the centroid of the four points, radius the mean distance to it.
Circle2 circle_from_four(const Vec2& a, const Vec2& b, const Vec2& c,
                         const Vec2& d);

// Samples a curve in sketch coordinates. Lines give their start point only,
// arcs `samples` points from start (inclusive) towards end (exclusive), and
// circles `samples` points around the full circle. Concatenating the output
// over a loop and appending the first point yields the closed polyline.
std::vector<Vec2> sample_curve(const Curve& curve, int samples);

// Open polyline of the loop; the closing point is not repeated.
std::vector<Vec2> loop_vertices(const Loop& loop, int samples_per_curve);

// Shoelace area of the discretized loop; positive when counterclockwise.
double signed_area(const Loop& loop, int samples_per_curve = 32);

// Axis-aligned box in bin units: corner (x, y) and extent (w, h), computed
// as the re-quantized tight box of the discretized loop.
struct Box2 {
  int x = 0, y = 0, w = 0, h = 0;
  friend auto operator<=>(const Box2&, const Box2&) = default;
};

Box2 loop_bbox(const Loop& loop, int samples_per_curve = 32);

}  // namespace hnc::cad
