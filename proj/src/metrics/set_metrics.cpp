#include "hnc/metrics/set_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace hnc::metrics {

using nlohmann::json;

Eigen::MatrixXd distance_matrix(const std::vector<PointCloud>& gen,
                                const std::vector<PointCloud>& gt, const CloudDistance& dist,
                                int threads) {
  if (gen.empty() || gt.empty()) throw std::invalid_argument("empty cloud set");
  Eigen::MatrixXd d(gen.size(), gt.size());
  const int rows = static_cast<int>(gen.size());
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < gt.size(); ++j) d(i, j) = dist(gen[i], gt[j]);
    }
  };
  threads = std::clamp(threads, 1, rows);
  if (threads == 1) {
    work(0, rows);
    return d;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back(work, rows * t / threads, rows * (t + 1) / threads);
  }
  for (auto& th : pool) th.join();
  return d;
}

double coverage(const Eigen::MatrixXd& d) {
  std::vector<char> covered(d.cols(), 0);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index j;
    d.row(i).minCoeff(&j);
    covered[j] = 1;
  }
  return 100.0 * std::count(covered.begin(), covered.end(), 1) / static_cast<double>(d.cols());
}

double coverage(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt,
                const CloudDistance& dist) {
  return coverage(distance_matrix(gen, gt, dist));
}

double mmd(const Eigen::MatrixXd& d) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) sum += d.col(j).minCoeff();
  return sum / static_cast<double>(d.cols());
}

double mmd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt,
           const CloudDistance& dist) {
  return mmd(distance_matrix(gen, gt, dist));
}

namespace {

std::vector<double> histogram(const std::vector<PointCloud>& clouds, int r) {
  std::vector<double> h(static_cast<std::size_t>(r) * r * r, 0.0);
  double total = 0;
  for (const auto& c : clouds) {
    for (const auto& p : c.points) {
      int idx[3];
      for (int k = 0; k < 3; ++k) idx[k] = std::clamp(static_cast<int>(std::floor(p[k] * r)), 0, r - 1);
      h[(static_cast<std::size_t>(idx[0]) * r + idx[1]) * r + idx[2]] += 1;
      total += 1;
    }
  }
  if (total == 0) throw std::invalid_argument("JSD over empty clouds");
  for (double& v : h) v /= total;
  return h;
}

}  // namespace

double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt, int resolution) {
  const auto p = histogram(gen, resolution), q = histogram(gt, resolution);
  double kl_p = 0, kl_q = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

NovelUnique novel_unique(const std::vector<std::uint64_t>& gen, const std::vector<std::uint64_t>& train) {
  if (gen.empty()) return {};
  const std::unordered_set<std::uint64_t> train_set(train.begin(), train.end());
  std::unordered_map<std::uint64_t, int> counts;
  for (auto h : gen) ++counts[h];
  int novel = 0, unique = 0;
  for (auto h : gen) {
    novel += !train_set.contains(h);
    unique += counts[h] == 1;
  }
  const double n = static_cast<double>(gen.size());
  return {100.0 * novel / n, 100.0 * unique / n};
}

MetricConfig MetricConfig::from_json(const json& j) {
  MetricConfig c;
  c.points = j.value("points", c.points);
  c.emd_points = j.value("emd_points", c.emd_points);
  c.jsd_resolution = j.value("jsd_resolution", c.jsd_resolution);
  c.voxel_resolution = j.value("voxel_resolution", c.voxel_resolution);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  return c;
}

json MetricConfig::to_json() const {
  return {{"points", points},
          {"emd_points", emd_points},
          {"jsd_resolution", jsd_resolution},
          {"voxel_resolution", voxel_resolution},
          {"seed", seed},
          {"threads", threads},
          {"chamfer", "squared"},
          {"jsd_log_base", 2}};
}

json MetricReport::to_json() const {
  return {{"cov_cd", cov_cd},   {"cov_emd", cov_emd},     {"mmd_cd", mmd_cd},
          {"mmd_emd", mmd_emd}, {"jsd", jsd},             {"novel", novel},
          {"unique", unique},   {"generated", generated}, {"reference", reference},
          {"config", config.to_json()}};
}

MetricReport evaluate_sets(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& gt,
                           const std::vector<std::uint64_t>& gen_hashes,
                           const std::vector<std::uint64_t>& train_hashes,
                           const MetricConfig& config) {
  MetricReport r;
  r.config = config;
  r.generated = static_cast<int>(gen.size());
  r.reference = static_cast<int>(gt.size());
  const auto dcd = distance_matrix(gen, gt, chamfer_distance, config.threads);
  r.cov_cd = coverage(dcd);
  r.mmd_cd = mmd(dcd);

  std::mt19937_64 rng(config.seed);
  auto sub = [&](const std::vector<PointCloud>& set) {
    std::vector<PointCloud> out;
    for (const auto& c : set) out.push_back(subsample(c, config.emd_points, rng));
    return out;
  };
  const auto gen_s = sub(gen), gt_s = sub(gt);
  const auto demd = distance_matrix(gen_s, gt_s, emd_distance, config.threads);
  r.cov_emd = coverage(demd);
  r.mmd_emd = mmd(demd);
  r.jsd = jsd(gen, gt, config.jsd_resolution);
  const auto nu = novel_unique(gen_hashes, train_hashes);
  r.novel = nu.novel;
  r.unique = nu.unique;
  return r;
}

}  // namespace hnc::metrics
