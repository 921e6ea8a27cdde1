#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "hnc/hierarchy/properties.hpp"

namespace hnc::vq {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int default_codebook_size(hierarchy::Level level);  // 2500 / 3500 / 3500

struct CodebookConfig {
  int size = 2500;
  int dim = 256;
  double decay = 0.99;
  double eps = 1e-5;
  int dead_threshold = 7;  // codes used fewer times per epoch are reinitialized
  nlohmann::json to_json() const;
  static CodebookConfig from_json(const nlohmann::json& j);
};

struct Assignment {
  int index = 0;
  double distance = 0;  // squared
};

// Vector-quantization codebook updated by exponential moving averages.
class Codebook {
 public:
  Codebook() = default;
  // Vectors uniform in [-1/K, 1/K]; EMA state starts at N = 1, m = b.
  Codebook(CodebookConfig cfg, std::uint64_t seed);

  // Nearest vector by squared distance; lowest index on ties.
  Assignment quantize(const Eigen::Ref<const Eigen::RowVectorXd>& v) const;
  std::vector<Assignment> quantize_rows(const RowMatrix& rows) const;

  // N <- decay N + (1 - decay) n, m <- decay m + (1 - decay) sum, b = m / max(N, eps).
  // Also adds the batch counts to the usage counters.
  void ema_update(const RowMatrix& rows, const std::vector<int>& assignment);

  // Resets every code with usage below the threshold to a uniformly drawn
  // pool row (N = 1, m = row) and zeroes all usage counters. Returns the
  // reset indices; an empty pool resets nothing.
  std::vector<int> reinit_dead(const RowMatrix& pool, std::mt19937_64& rng);

  int size() const { return cfg_.size; }
  int dim() const { return cfg_.dim; }
  const CodebookConfig& config() const { return cfg_; }
  const RowMatrix& vectors() const { return vectors_; }
  RowMatrix& vectors() { return vectors_; }
  const Eigen::VectorXd& ema_count() const { return count_; }
  const RowMatrix& ema_sum() const { return sum_; }
  const std::vector<long>& usage() const { return usage_; }
  void reset_usage() { std::fill(usage_.begin(), usage_.end(), 0); }

  // Vectors and EMA state as a checkpoint, plus a JSON sidecar with the
  // level, size and usage histogram.
  void save(const std::filesystem::path& ckpt, const std::filesystem::path& sidecar,
            hierarchy::Level level) const;
  static Codebook load(const std::filesystem::path& ckpt);

 private:
  CodebookConfig cfg_;
  RowMatrix vectors_, sum_;
  Eigen::VectorXd count_;
  std::vector<long> usage_;
};

}  // namespace hnc::vq
