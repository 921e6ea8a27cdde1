#include "hnc/geometry/sample.hpp"

#include <stdexcept>

namespace hnc::geometry {

namespace {

struct Face {
  int i, j, k;
  int axis;  // 0, 1, 2
  int side;  // 0 = negative, 1 = positive
};

}  // namespace

PointCloud sample_surface(const VoxelGrid& grid, int count, std::mt19937_64& rng) {
  if (grid.empty()) throw std::invalid_argument("sample_surface: empty voxel grid");
  PointCloud cloud;
  if (count <= 0) return cloud;

  const int r = grid.resolution();
  std::vector<Face> faces;
  for (int k = 0; k < r; ++k) {
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < r; ++i) {
        if (!grid.at(i, j, k)) continue;
        const int c[3] = {i, j, k};
        for (int axis = 0; axis < 3; ++axis) {
          for (int side = 0; side < 2; ++side) {
            int n[3] = {c[0], c[1], c[2]};
            n[axis] += side ? 1 : -1;
            if (!grid.in_bounds(n[0], n[1], n[2]) || !grid.at(n[0], n[1], n[2])) {
              faces.push_back({i, j, k, axis, side});
            }
          }
        }
      }
    }
  }

  std::uniform_int_distribution<std::size_t> pick(0, faces.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  cloud.points.reserve(count);
  for (int n = 0; n < count; ++n) {
    const auto& f = faces[pick(rng)];
    double p[3] = {f.i + unit(rng), f.j + unit(rng), f.k + unit(rng)};
    p[f.axis] = (f.axis == 0 ? f.i : f.axis == 1 ? f.j : f.k) + f.side;
    cloud.points.emplace_back(p[0] / r, p[1] / r, p[2] / r);
  }
  return cloud;
}

}  // namespace hnc::geometry
