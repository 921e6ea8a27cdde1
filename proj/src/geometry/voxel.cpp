#include "hnc/geometry/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "hnc/cad/plane.hpp"
#include "hnc/geometry/raster.hpp"

namespace hnc::geometry {

VoxelGrid::VoxelGrid(int resolution) : resolution_(resolution) {
  if (resolution <= 0) throw std::invalid_argument("voxel resolution must be positive");
  bits_.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
}

std::size_t VoxelGrid::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void VoxelGrid::unite(const VoxelGrid& other) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
}

void VoxelGrid::subtract(const VoxelGrid& other) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= static_cast<std::uint8_t>(!other.bits_[i]);
}

void VoxelGrid::intersect(const VoxelGrid& other) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= other.bits_[i];
}

VoxelGrid voxelize_step(const cad::ExtrudeStep& step, int resolution, int samples_per_curve) {
  constexpr double kEps = 1e-9;
  VoxelGrid grid(resolution);
  const ProfileRegion region(discretize_profile(step.loops, samples_per_curve));
  if (region.empty()) return grid;
  const auto frame = cad::plane_frame(step.plane);
  const double depth = cad::distance_value(step.distance);

  // World bounding box of the swept region limits the voxels visited.
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e9), hi = Eigen::Vector3d::Constant(-1e9);
  for (double u : {region.min_u(), region.max_u()}) {
    for (double v : {region.min_v(), region.max_v()}) {
      for (double w : {0.0, depth}) {
        const auto p = frame.to_world(u, v, w);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
  }
  auto first = [&](double x) {
    return std::clamp(static_cast<int>(std::floor(x * resolution - 0.5 - kEps)), 0, resolution - 1);
  };
  auto last = [&](double x) {
    return std::clamp(static_cast<int>(std::ceil(x * resolution - 0.5 + kEps)), 0, resolution - 1);
  };
  if ((hi.array() < 0.0).any() || (lo.array() > 1.0).any()) return grid;

  for (int k = first(lo.z()); k <= last(hi.z()); ++k) {
    for (int j = first(lo.y()); j <= last(hi.y()); ++j) {
      for (int i = first(lo.x()); i <= last(hi.x()); ++i) {
        const Eigen::Vector3d c((i + 0.5) / resolution, (j + 0.5) / resolution,
                                (k + 0.5) / resolution);
        const auto local = frame.to_local(c);
        if (local.z() < -kEps || local.z() > depth + kEps) continue;
        if (region.contains(local.x(), local.y())) grid.set(i, j, k);
      }
    }
  }
  return grid;
}

ExecutionResult execute_model(const cad::CadModel& model, int resolution, int samples_per_curve) {
  ExecutionResult result{VoxelGrid(resolution), {}, {}};
  for (std::size_t s = 0; s < model.steps.size(); ++s) {
    const auto& step = model.steps[s];
    const auto part = voxelize_step(step, resolution, samples_per_curve);
    if (part.empty()) {
      result.skipped_steps.push_back(static_cast<int>(s));
      result.warnings.push_back(fmt::format("step {} produced no voxels; skipped", s));
      continue;
    }
    switch (step.op) {
      case cad::BoolOp::Union: result.grid.unite(part); break;
      case cad::BoolOp::Cut: result.grid.subtract(part); break;
      case cad::BoolOp::Intersect: result.grid.intersect(part); break;
    }
  }
  return result;
}

}  // namespace hnc::geometry
