#pragma once

#include <cstdint>
#include <random>

#include "hnc/geometry/sample.hpp"

namespace hnc::metrics {

using geometry::PointCloud;

// Mean squared nearest-neighbour distance A->B plus B->A.
// Throws std::invalid_argument when either cloud is empty.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

inline constexpr int kMaxExactEmdPoints = 512;

// Minimum over perfect matchings of the mean Euclidean pair distance.
// Throws std::invalid_argument on size mismatch or more than 512 points.
double emd_distance(const PointCloud& a, const PointCloud& b);

// Uniform subsample without replacement; returns the input when n >= size.
PointCloud subsample(const PointCloud& cloud, int n, std::mt19937_64& rng);

}  // namespace hnc::metrics
