#pragma once

#include <iosfwd>
#include <string>

#include "hnc/geometry/mesh.hpp"
#include "hnc/geometry/sample.hpp"
#include "hnc/geometry/voxel.hpp"

namespace hnc::geometry {

// ASCII OBJ; one group per step, Cut steps use material "cut".
void write_obj(const TriangleMesh& mesh, std::ostream& out);
std::string to_obj(const TriangleMesh& mesh);

// One "x y z" line per point.
void write_xyz(const PointCloud& cloud, std::ostream& out);
PointCloud read_xyz(std::istream& in);

// 16-byte header {"HNCV", u32 R, u64 payload bytes} followed by the occupancy
// bits packed LSB-first in voxel index order. Little-endian.
void write_voxels(const VoxelGrid& grid, std::ostream& out);
VoxelGrid read_voxels(std::istream& in);

}  // namespace hnc::geometry
