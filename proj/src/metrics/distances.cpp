#include "hnc/metrics/distances.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "hnc/metrics/assignment.hpp"

namespace hnc::metrics {

namespace {

Eigen::MatrixX3d as_matrix(const PointCloud& c) {
  Eigen::MatrixX3d m(c.size(), 3);
  for (std::size_t i = 0; i < c.size(); ++i) m.row(i) = c.points[i].transpose();
  return m;
}

Eigen::MatrixXd squared_distances(const PointCloud& a, const PointCloud& b) {
  const auto ma = as_matrix(a), mb = as_matrix(b);
  Eigen::MatrixXd d(ma.rows(), mb.rows());
  for (Eigen::Index j = 0; j < mb.rows(); ++j) {
    d.col(j) = (ma.rowwise() - mb.row(j)).rowwise().squaredNorm();
  }
  return d;
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer distance of an empty cloud");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best_b(b.size(), inf);
  double sum_a = 0.0;
  for (const auto& p : a.points) {
    double best = inf;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto& q = b.points[j];
      const double dx = p.x() - q.x(), dy = p.y() - q.y(), dz = p.z() - q.z();
      const double d = dx * dx + dy * dy + dz * dz;
      best = std::min(best, d);
      best_b[j] = std::min(best_b[j], d);
    }
    sum_a += best;
  }
  double sum_b = 0.0;
  for (double d : best_b) sum_b += d;
  return sum_a / a.size() + sum_b / b.size();
}

double emd_distance(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(fmt::format("EMD needs equal sizes, got {} and {}", a.size(), b.size()));
  }
  if (a.size() > static_cast<std::size_t>(kMaxExactEmdPoints)) {
    throw std::invalid_argument(fmt::format("exact EMD limited to {} points", kMaxExactEmdPoints));
  }
  if (a.empty()) throw std::invalid_argument("EMD of empty clouds");
  const Eigen::MatrixXd cost = squared_distances(a, b).cwiseSqrt();
  const auto match = min_cost_assignment(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) total += cost(i, match[i]);
  return total / static_cast<double>(a.size());
}

PointCloud subsample(const PointCloud& cloud, int n, std::mt19937_64& rng) {
  if (n < 0 || static_cast<std::size_t>(n) >= cloud.size()) return cloud;
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  PointCloud out;
  for (int i = 0; i < n; ++i) out.points.push_back(cloud.points[idx[i]]);
  return out;
}

}  // namespace hnc::metrics
