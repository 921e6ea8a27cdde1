#include "hnc/geometry/discretize.hpp"

#include <cmath>

namespace hnc::geometry {

Polyline2D discretize_loop(const cad::Loop& loop, int samples_per_curve) {
  if (loop.is_circle()) {
    const auto& p = loop.curves.front().points;
    const auto c = cad::circle_from_four(cad::dequantize(p[0]), cad::dequantize(p[1]),
                                         cad::dequantize(p[2]), cad::dequantize(p[3]));
    if (c.radius <= 1e-12) {
      throw cad::ValidationError(cad::Reason::DegenerateLoop, "zero-radius circle");
    }
  }
  Polyline2D out;
  out.points = cad::loop_vertices(loop, samples_per_curve);
  if (!out.points.empty()) out.points.push_back(out.points.front());
  return out;
}

std::vector<Polyline2D> discretize_profile(const std::vector<cad::Loop>& loops,
                                           int samples_per_curve) {
  std::vector<Polyline2D> out;
  out.reserve(loops.size());
  for (const auto& loop : loops) out.push_back(discretize_loop(loop, samples_per_curve));
  return out;
}

double polyline_length(const Polyline2D& line) {
  double len = 0;
  for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
    len += std::hypot(line.points[i + 1].x - line.points[i].x,
                      line.points[i + 1].y - line.points[i].y);
  }
  return len;
}

}  // namespace hnc::geometry
