#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hnc/metrics/distances.hpp"

namespace hnc::metrics {

using CloudDistance = std::function<double(const PointCloud&, const PointCloud&)>;

// D(i, j) = dist(gen[i], gt[j]). Rows are split across `threads` workers.
Eigen::MatrixXd distance_matrix(const std::vector<PointCloud>& gen,
                                const std::vector<PointCloud>& gt,
                                const CloudDistance& dist, int threads = 1);

// Each generated cloud is matched to its nearest ground-truth cloud (first
// index on ties); percentage of ground-truth clouds matched at least once.
double coverage(const Eigen::MatrixXd& gen_to_gt);
double coverage(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt,
                const CloudDistance& dist);

// Mean over ground truth of the distance to the closest generated cloud.
double mmd(const Eigen::MatrixXd& gen_to_gt);
double mmd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt,
           const CloudDistance& dist);

// Jensen-Shannon divergence (base 2) of the pooled R^3 occupancy histograms.
double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt, int resolution = 32);

struct NovelUnique {
  double novel = 0;   // percent
  double unique = 0;  // percent
};
NovelUnique novel_unique(const std::vector<std::uint64_t>& gen_hashes,
                         const std::vector<std::uint64_t>& train_hashes);

struct MetricConfig {
  int points = 2000;
  int emd_points = 512;
  int jsd_resolution = 32;
  int voxel_resolution = 64;
  std::uint64_t seed = 0;
  int threads = 1;
  nlohmann::json to_json() const;
  static MetricConfig from_json(const nlohmann::json& j);
};

struct MetricReport {
  double cov_cd = 0, cov_emd = 0;
  double mmd_cd = 0, mmd_emd = 0;
  double jsd = 0;
  double novel = 0, unique = 0;
  int generated = 0, reference = 0;
  MetricConfig config;
  nlohmann::json to_json() const;
};

// Clouds are used as given for CD and JSD and subsampled to emd_points for EMD.
MetricReport evaluate_sets(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt,
                           const std::vector<std::uint64_t>& gen_hashes,
                           const std::vector<std::uint64_t>& train_hashes,
                           const MetricConfig& config = {});

}  // namespace hnc::metrics
