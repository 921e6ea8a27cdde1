#include "hnc/geometry/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hnc::geometry {

namespace {

constexpr double kEps = 1e-9;

double segment_distance(double px, double py, const Vec2& a, const Vec2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * dx), py - (a.y + t * dy));
}

}  // namespace

ProfileRegion::ProfileRegion(std::vector<Polyline2D> loops) : loops_(std::move(loops)) {
  lo_u_ = lo_v_ = std::numeric_limits<double>::infinity();
  hi_u_ = hi_v_ = -std::numeric_limits<double>::infinity();
  for (const auto& l : loops_) {
    for (const auto& p : l.points) {
      lo_u_ = std::min(lo_u_, p.x);
      hi_u_ = std::max(hi_u_, p.x);
      lo_v_ = std::min(lo_v_, p.y);
      hi_v_ = std::max(hi_v_, p.y);
    }
  }
}

std::vector<double> ProfileRegion::crossings(double v) const {
  std::vector<double> xs;
  for (const auto& l : loops_) {
    for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
      const auto& a = l.points[i];
      const auto& b = l.points[i + 1];
      // Half-open rule: count an edge when v lies in [min_y, max_y).
      if ((a.y <= v && v < b.y) || (b.y <= v && v < a.y)) {
        xs.push_back(a.x + (v - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

bool ProfileRegion::on_boundary(double u, double v) const {
  for (const auto& l : loops_) {
    for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
      if (segment_distance(u, v, l.points[i], l.points[i + 1]) <= kEps) return true;
    }
  }
  return false;
}

bool ProfileRegion::contains(double u, double v) const {
  if (loops_.empty()) return false;
  if (u < lo_u_ - kEps || u > hi_u_ + kEps || v < lo_v_ - kEps || v > hi_v_ + kEps) {
    return false;
  }
  const auto xs = crossings(v);
  const auto left = std::lower_bound(xs.begin(), xs.end(), u) - xs.begin();
  if (left % 2 == 1) return true;
  return on_boundary(u, v);
}

std::size_t Bitmask2D::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), true));
}

Bitmask2D rasterize_profile(const std::vector<Polyline2D>& loops, int resolution) {
  Bitmask2D mask{resolution, std::vector<bool>(static_cast<std::size_t>(resolution) * resolution)};
  if (loops.empty()) return mask;
  const ProfileRegion region(loops);
  for (int j = 0; j < resolution; ++j) {
    const double v = (j + 0.5) / resolution;
    const auto xs = region.crossings(v);
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int i0 = std::max(0, static_cast<int>(std::ceil((xs[k] - kEps) * resolution - 0.5)));
      const int i1 = std::min(resolution - 1,
                              static_cast<int>(std::floor((xs[k + 1] + kEps) * resolution - 0.5)));
      for (int i = i0; i <= i1; ++i) mask.cells[static_cast<std::size_t>(j) * resolution + i] = true;
    }
    // Boundary-inclusive: centers on edges the crossings miss.
    if (v >= region.min_v() - kEps && v <= region.max_v() + kEps) {
      for (int i = 0; i < resolution; ++i) {
        auto cell = mask.cells[static_cast<std::size_t>(j) * resolution + i];
        if (!cell && region.on_boundary((i + 0.5) / resolution, v)) {
          mask.cells[static_cast<std::size_t>(j) * resolution + i] = true;
        }
      }
    }
  }
  return mask;
}

}  // namespace hnc::geometry
