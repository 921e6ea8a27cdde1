#pragma once

#include <vector>

#include "hnc/geometry/discretize.hpp"

namespace hnc::geometry {

// Even-odd region bounded by closed polylines; inner loops are holes.
// Points on (or within 1e-9 of) a boundary count as inside.
class ProfileRegion {
 public:
  explicit ProfileRegion(std::vector<Polyline2D> loops);

  bool contains(double u, double v) const;
  // Sorted boundary crossings of the horizontal line at height v.
  std::vector<double> crossings(double v) const;
  bool on_boundary(double u, double v) const;
  bool empty() const { return loops_.empty(); }

  double min_u() const { return lo_u_; }
  double max_u() const { return hi_u_; }
  double min_v() const { return lo_v_; }
  double max_v() const { return hi_v_; }

 private:
  std::vector<Polyline2D> loops_;
  double lo_u_ = 0, hi_u_ = 0, lo_v_ = 0, hi_v_ = 0;
};

// Row-major R x R occupancy; cell (i, j) has center ((i + .5)/R, (j + .5)/R)
// and index j * R + i.
struct Bitmask2D {
  int resolution = 0;
  std::vector<bool> cells;
  bool at(int i, int j) const { return cells[static_cast<std::size_t>(j) * resolution + i]; }
  std::size_t count() const;
};

// Scanline even-odd fill over the sketch unit square.
Bitmask2D rasterize_profile(const std::vector<Polyline2D>& loops, int resolution);

}  // namespace hnc::geometry
