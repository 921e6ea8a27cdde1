#pragma once

#include <vector>

#include "hnc/cad/curve_math.hpp"
#include "hnc/cad/model.hpp"

namespace hnc::geometry {

using cad::Vec2;

// Closed polyline in sketch coordinates; front() == back().
struct Polyline2D {
  std::vector<Vec2> points;
  std::size_t segments() const { return points.empty() ? 0 : points.size() - 1; }
};

inline constexpr int kDefaultSamplesPerCurve = 32;

// Lines contribute their endpoints, arcs follow the circle through their three
// points, circles use the centroid of their four points and the mean radius.
// Throws cad::ValidationError(DegenerateLoop) for a zero-radius circle.
Polyline2D discretize_loop(const cad::Loop& loop,
                           int samples_per_curve = kDefaultSamplesPerCurve);

std::vector<Polyline2D> discretize_profile(const std::vector<cad::Loop>& loops,
                                           int samples_per_curve = kDefaultSamplesPerCurve);

double polyline_length(const Polyline2D& line);

}  // namespace hnc::geometry
