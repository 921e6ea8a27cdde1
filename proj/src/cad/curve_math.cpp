#include "hnc/cad/curve_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hnc/cad/quantize.hpp"

namespace hnc::cad {

Vec2 dequantize(const Point& p) {
  return {dequantize_coord(p.x), dequantize_coord(p.y)};
}

std::optional<Circle2> circumcircle(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double det = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
  if (std::abs(det) < 1e-9) return std::nullopt;
  const double a2 = a.x * a.x + a.y * a.y;
  const double b2 = b.x * b.x + b.y * b.y;
  const double c2 = c.x * c.x + c.y * c.y;
  Vec2 center{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / det,
              (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / det};
  return Circle2{center, std::hypot(a.x - center.x, a.y - center.y)};
}

Circle2 circle_from_four(const Vec2& a, const Vec2& b, const Vec2& c,
                         const Vec2& d) {
  Vec2 center{(a.x + b.x + c.x + d.x) / 4.0, (a.y + b.y + c.y + d.y) / 4.0};
  double r = 0;
  for (const auto* p : {&a, &b, &c, &d}) {
    r += std::hypot(p->x - center.x, p->y - center.y);
  }
  return {center, r / 4.0};
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double angle) {
  angle = std::fmod(angle, kTwoPi);
  return angle < 0 ? angle + kTwoPi : angle;
}

}  // namespace

std::vector<Vec2> sample_curve(const Curve& curve, int samples) {
  const auto& pts = curve.points;
  std::vector<Vec2> out;
  switch (curve.kind()) {
    case CurveKind::Line:
      out.push_back(dequantize(pts[0]));
      break;
    case CurveKind::Arc: {
      const Vec2 s = dequantize(pts[0]);
      const Vec2 m = dequantize(pts[1]);
      const Vec2 e = dequantize(pts[2]);
      const auto circle = circumcircle(s, m, e);
      if (!circle) {
        out.push_back(s);
        break;
      }
      const auto& c = circle->center;
      const double a0 = std::atan2(s.y - c.y, s.x - c.x);
      const double am = wrap(std::atan2(m.y - c.y, m.x - c.x) - a0);
      double sweep = wrap(std::atan2(e.y - c.y, e.x - c.x) - a0);
      // Sweep counterclockwise when the middle point lies on that side,
      // otherwise clockwise.
      if (am > sweep) sweep -= kTwoPi;
      out.reserve(samples);
      out.push_back(s);
      for (int i = 1; i < samples; ++i) {
        const double t = a0 + sweep * i / samples;
        out.push_back({c.x + circle->radius * std::cos(t),
                       c.y + circle->radius * std::sin(t)});
      }
      break;
    }
    case CurveKind::Circle: {
      const auto circle = circle_from_four(dequantize(pts[0]), dequantize(pts[1]),
                                           dequantize(pts[2]), dequantize(pts[3]));
      const Vec2 s = dequantize(pts[0]);
      const double a0 = std::atan2(s.y - circle.center.y, s.x - circle.center.x);
      out.reserve(samples);
      for (int i = 0; i < samples; ++i) {
        const double t = a0 + kTwoPi * i / samples;
        out.push_back({circle.center.x + circle.radius * std::cos(t),
                       circle.center.y + circle.radius * std::sin(t)});
      }
      break;
    }
  }
  return out;
}

std::vector<Vec2> loop_vertices(const Loop& loop, int samples_per_curve) {
  std::vector<Vec2> out;
  for (const auto& curve : loop.curves) {
    auto part = sample_curve(curve, samples_per_curve);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double signed_area(const Loop& loop, int samples_per_curve) {
  const auto v = loop_vertices(loop, samples_per_curve);
  double area = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    area += p.x * q.y - q.x * p.y;
  }
  return 0.5 * area;
}

Box2 loop_bbox(const Loop& loop, int samples_per_curve) {
  const auto v = loop_vertices(loop, samples_per_curve);
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  for (const auto& p : v) {
    lo_x = std::min(lo_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_x = std::max(hi_x, p.x);
    hi_y = std::max(hi_y, p.y);
  }
  const int x0 = quantize_clamped(lo_x), y0 = quantize_clamped(lo_y);
  return {x0, y0, quantize_clamped(hi_x) - x0, quantize_clamped(hi_y) - y0};
}

}  // namespace hnc::cad
