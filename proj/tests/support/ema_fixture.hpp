#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hnc/vq/codebook.hpp"

namespace hnc::testing {

// Four Gaussian clusters at (+-scale, +-scale) in a plane, `per` points each,
// lifted to `dim` dimensions by an orthonormal 2-column map.
struct ClusterData {
  Eigen::MatrixXd basis;   // dim x 2
  Eigen::MatrixXd plane;   // n x 2
  vq::RowMatrix lifted;    // n x dim
  Eigen::Matrix<double, 4, 2> means;  // empirical, per cluster
};

inline ClusterData make_clusters(std::uint64_t seed, int per = 8, double scale = 0.5, double sigma = 0.025,
                                 int dim = 256) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ClusterData c;
  Eigen::MatrixXd raw(dim, 2);
  for (int i = 0; i < raw.size(); ++i) raw.data()[i] = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  c.basis = qr.householderQ() * Eigen::MatrixXd::Identity(dim, 2);
  const double corners[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  c.plane.resize(4 * per, 2);
  c.means.setZero();
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < per; ++i) {
      const int r = k * per + i;
      c.plane(r, 0) = scale * corners[k][0] + sigma * g(rng);
      c.plane(r, 1) = scale * corners[k][1] + sigma * g(rng);
      c.means.row(k) += c.plane.row(r) / per;
    }
  }
  c.lifted = c.plane * c.basis.transpose();
  return c;
}

// Mean squared distance from every point to its nearest code.
inline double quantization_error(const vq::Codebook& cb, const vq::RowMatrix& x) {
  double total = 0;
  for (const auto& a : cb.quantize_rows(x)) total += a.distance;
  return total / static_cast<double>(x.rows());
}

// Largest in-plane distance from a cluster mean to its nearest code.
inline double plane_error(const vq::Codebook& cb, const ClusterData& c) {
  const Eigen::MatrixXd proj = cb.vectors() * c.basis;
  double worst = 0;
  for (int k = 0; k < 4; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < proj.rows(); ++i) best = std::min(best, (proj.row(i) - c.means.row(k)).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

struct EmaRun {
  double plane_error = 0;
  int reinit_events = 0;   // epoch boundaries where some code was reset
  int codes_reset = 0;
  bool first_reset_lowers_error = false;  // quantization error strictly drops at the first reset
  double error_before_first_reset = 0;
  bool saw_low_usage = false;       // some code finished an epoch with usage < threshold
  double first_reset_error = 0;     // quantization error just after the first reset
  double final_error = 0;
};

// Full-batch epochs: one EMA update over the whole set, then dead codes are
// reinitialized from that epoch's vectors.
inline EmaRun run_ema(const ClusterData& c, int K, int updates, std::uint64_t seed) {
  vq::CodebookConfig cfg;
  cfg.size = K;
  cfg.dim = static_cast<int>(c.lifted.cols());
  vq::Codebook cb(cfg, seed);
  std::mt19937_64 rng(seed ^ 0xa5a5a5a5ULL);
  EmaRun run;
  for (int t = 0; t < updates; ++t) {
    std::vector<int> codes;
    for (const auto& a : cb.quantize_rows(c.lifted)) codes.push_back(a.index);
    cb.ema_update(c.lifted, codes);
    for (long u : cb.usage()) run.saw_low_usage = run.saw_low_usage || u < cfg.dead_threshold;
    const double before = quantization_error(cb, c.lifted);
    const auto reset = cb.reinit_dead(c.lifted, rng);
    if (!reset.empty()) {
      const double after = quantization_error(cb, c.lifted);
      if (run.reinit_events == 0) {
        run.first_reset_lowers_error = after < before;
        run.error_before_first_reset = before;
        run.first_reset_error = after;
      }
      ++run.reinit_events;
      run.codes_reset += static_cast<int>(reset.size());
    }
  }
  run.plane_error = plane_error(cb, c);
  run.final_error = quantization_error(cb, c.lifted);
  return run;
}

}  // namespace hnc::testing
