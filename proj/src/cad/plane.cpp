#include "hnc/cad/plane.hpp"

#include <Eigen/Geometry>
#include <numbers>

#include "hnc/cad/quantize.hpp"

namespace hnc::cad {

double origin_value(int bin) { return static_cast<double>(bin) / kBins; }

double angle_value(int bin) { return bin * 2.0 * std::numbers::pi / kBins; }

double scale_value(int bin) { return (bin + 1.0) / kBins; }

double distance_value(int bin) { return dequantize_coord(bin); }

PlaneFrame plane_frame(const SketchPlane& plane) {
  PlaneFrame f;
  f.origin = {origin_value(plane.origin[0]), origin_value(plane.origin[1]),
              origin_value(plane.origin[2])};
  f.rotation = (Eigen::AngleAxisd(angle_value(plane.angles[0]), Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(angle_value(plane.angles[1]), Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(angle_value(plane.angles[2]), Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  f.scale = scale_value(plane.scale);
  return f;
}

Eigen::Vector3d PlaneFrame::to_world(double u, double v, double w) const {
  return origin + rotation * Eigen::Vector3d(scale * u, scale * v, w);
}

Eigen::Vector3d PlaneFrame::to_local(const Eigen::Vector3d& world) const {
  Eigen::Vector3d q = rotation.transpose() * (world - origin);
  return {q.x() / scale, q.y() / scale, q.z()};
}

}  // namespace hnc::cad
