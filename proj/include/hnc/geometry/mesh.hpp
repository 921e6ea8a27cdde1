#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "hnc/cad/model.hpp"

namespace hnc::geometry {

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> triangle_step;  // source step of each triangle
  std::vector<bool> step_is_cut;   // material flag per step

  bool empty() const { return triangles.empty(); }
};

// Viewer-grade mesh: per step, side walls along every loop polyline plus caps
// made of merged raster runs. Steps are concatenated without booleans.
TriangleMesh mesh_model(const cad::CadModel& model, int samples_per_curve = 32,
                        int cap_resolution = 32);

}  // namespace hnc::geometry
