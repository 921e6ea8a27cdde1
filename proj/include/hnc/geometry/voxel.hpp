#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hnc/cad/model.hpp"

namespace hnc::geometry {

// Occupancy over [0,1]^3. Voxel (i, j, k) has center ((i+.5)/R, (j+.5)/R,
// (k+.5)/R) and index i + R * (j + R * k).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(int resolution);

  int resolution() const { return resolution_; }
  std::size_t size() const { return bits_.size(); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(resolution_) * (j + static_cast<std::size_t>(resolution_) * k);
  }
  bool at(int i, int j, int k) const { return bits_[index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool on = true) { bits_[index(i, j, k)] = on ? 1 : 0; }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < resolution_ && j < resolution_ && k < resolution_;
  }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  void unite(const VoxelGrid& other);
  void subtract(const VoxelGrid& other);
  void intersect(const VoxelGrid& other);

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  int resolution_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Voxels covered by one extrusion step (before any boolean combination).
VoxelGrid voxelize_step(const cad::ExtrudeStep& step, int resolution,
                        int samples_per_curve = 32);

struct ExecutionResult {
  VoxelGrid grid;
  std::vector<int> skipped_steps;  // steps that produced no voxels
  std::vector<std::string> warnings;
};

// Steps combined left to right: Union = OR, Cut = AND-NOT, Intersect = AND.
ExecutionResult execute_model(const cad::CadModel& model, int resolution = 64,
                              int samples_per_curve = 32);

}  // namespace hnc::geometry
