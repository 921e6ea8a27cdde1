#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "hnc/geometry/voxel.hpp"

namespace hnc::geometry {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

inline constexpr int kDefaultSurfacePoints = 2000;

// Uniform over exposed voxel faces (faces whose 6-neighbor is empty or outside
// the grid): a face is drawn uniformly, then a point uniformly on it.
// Throws std::invalid_argument for an empty grid.
PointCloud sample_surface(const VoxelGrid& grid, int count, std::mt19937_64& rng);

}  // namespace hnc::geometry
