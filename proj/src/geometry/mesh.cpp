#include "hnc/geometry/mesh.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "hnc/cad/plane.hpp"
#include "hnc/geometry/raster.hpp"

namespace hnc::geometry {

namespace {

constexpr double kMinArea = 1e-14;

void add_triangle(TriangleMesh& mesh, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                  const Eigen::Vector3d& c, int step) {
  if ((b - a).cross(c - a).norm() <= kMinArea) return;
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), {a, b, c});
  mesh.triangles.push_back({base, base + 1, base + 2});
  mesh.triangle_step.push_back(step);
}

}  // namespace

TriangleMesh mesh_model(const cad::CadModel& model, int samples_per_curve, int cap_resolution) {
  TriangleMesh mesh;
  for (std::size_t s = 0; s < model.steps.size(); ++s) {
    const auto& step = model.steps[s];
    const int id = static_cast<int>(s);
    mesh.step_is_cut.push_back(step.op == cad::BoolOp::Cut);
    const auto frame = cad::plane_frame(step.plane);
    const double depth = cad::distance_value(step.distance);
    const auto loops = discretize_profile(step.loops, samples_per_curve);

    for (const auto& line : loops) {
      for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
        const auto& a = line.points[i];
        const auto& b = line.points[i + 1];
        const auto a0 = frame.to_world(a.x, a.y, 0), b0 = frame.to_world(b.x, b.y, 0);
        const auto a1 = frame.to_world(a.x, a.y, depth), b1 = frame.to_world(b.x, b.y, depth);
        add_triangle(mesh, a0, b0, b1, id);
        add_triangle(mesh, a0, b1, a1, id);
      }
    }

    const auto mask = rasterize_profile(loops, cap_resolution);
    const double cell = 1.0 / cap_resolution;
    for (int j = 0; j < cap_resolution; ++j) {
      int i = 0;
      while (i < cap_resolution) {
        if (!mask.at(i, j)) {
          ++i;
          continue;
        }
        const int start = i;
        while (i < cap_resolution && mask.at(i, j)) ++i;
        const double u0 = start * cell, u1 = i * cell, v0 = j * cell, v1 = (j + 1) * cell;
        for (double w : {0.0, depth}) {
          const auto p00 = frame.to_world(u0, v0, w), p10 = frame.to_world(u1, v0, w);
          const auto p11 = frame.to_world(u1, v1, w), p01 = frame.to_world(u0, v1, w);
          if (w == 0.0) {  // bottom faces away from the extrusion direction
            add_triangle(mesh, p00, p11, p10, id);
            add_triangle(mesh, p00, p01, p11, id);
          } else {
            add_triangle(mesh, p00, p10, p11, id);
            add_triangle(mesh, p00, p11, p01, id);
          }
        }
      }
    }
  }
  return mesh;
}

}  // namespace hnc::geometry
