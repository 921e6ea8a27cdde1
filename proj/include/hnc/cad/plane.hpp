#pragma once

#include <Eigen/Core>

#include "hnc/cad/model.hpp"

namespace hnc::cad {

// World placement of a sketch plane. A sketch point (u, v) at height w along
// the extrusion maps to origin + rotation * (scale * u, scale * v, w).
// rotation = Rz(theta) * Ry(phi) * Rx(gamma).
struct PlaneFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 1.0;

  Eigen::Vector3d to_world(double u, double v, double w) const;
  // Inverse of to_world: returns (u, v, w).
  Eigen::Vector3d to_local(const Eigen::Vector3d& world) const;
  Eigen::Vector3d normal() const { return rotation.col(2); }
};

PlaneFrame plane_frame(const SketchPlane& plane);

double origin_value(int bin);    // q / 64
double angle_value(int bin);     // q * 2pi / 64
double scale_value(int bin);     // (q + 1) / 64
double distance_value(int bin);  // (q + 0.5) / 64

}  // namespace hnc::cad
