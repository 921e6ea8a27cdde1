#include "hnc/vq/codebook.hpp"

#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "hnc/nn/checkpoint.hpp"

namespace hnc::vq {

using nlohmann::json;

int default_codebook_size(hierarchy::Level level) {
  return level == hierarchy::Level::Loop ? 2500 : 3500;
}

json CodebookConfig::to_json() const {
  return {{"size", size}, {"dim", dim}, {"decay", decay}, {"eps", eps}, {"dead_threshold", dead_threshold}};
}

CodebookConfig CodebookConfig::from_json(const json& j) {
  CodebookConfig c;
  c.size = j.value("size", c.size);
  c.dim = j.value("dim", c.dim);
  c.decay = j.value("decay", c.decay);
  c.eps = j.value("eps", c.eps);
  c.dead_threshold = j.value("dead_threshold", c.dead_threshold);
  return c;
}

Codebook::Codebook(CodebookConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.size <= 0 || cfg_.dim <= 0) throw std::invalid_argument("codebook needs positive size and dim");
  std::mt19937_64 rng(seed);
  const double r = 1.0 / cfg_.size;
  std::uniform_real_distribution<double> u(-r, r);
  vectors_.resize(cfg_.size, cfg_.dim);
  for (Eigen::Index i = 0; i < vectors_.size(); ++i) vectors_.data()[i] = u(rng);
  sum_ = vectors_;
  count_ = Eigen::VectorXd::Ones(cfg_.size);
  usage_.assign(cfg_.size, 0);
}

Assignment Codebook::quantize(const Eigen::Ref<const Eigen::RowVectorXd>& v) const {
  Assignment best{0, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < cfg_.size; ++i) {
    const double d = (vectors_.row(i) - v).squaredNorm();
    if (d < best.distance) best = {i, d};
  }
  return best;
}

std::vector<Assignment> Codebook::quantize_rows(const RowMatrix& rows) const {
  std::vector<Assignment> out;
  out.reserve(rows.rows());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) out.push_back(quantize(rows.row(r)));
  return out;
}

void Codebook::ema_update(const RowMatrix& rows, const std::vector<int>& assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != rows.rows()) throw std::invalid_argument("one code per row");
  Eigen::VectorXd n = Eigen::VectorXd::Zero(cfg_.size);
  RowMatrix s = RowMatrix::Zero(cfg_.size, cfg_.dim);
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    n(assignment[r]) += 1;
    s.row(assignment[r]) += rows.row(r);
    ++usage_[assignment[r]];
  }
  const double lambda = cfg_.decay;
  count_ = lambda * count_ + (1 - lambda) * n;
  sum_ = lambda * sum_ + (1 - lambda) * s;
  for (int i = 0; i < cfg_.size; ++i) vectors_.row(i) = sum_.row(i) / std::max(count_(i), cfg_.eps);
}

std::vector<int> Codebook::reinit_dead(const RowMatrix& pool, std::mt19937_64& rng) {
  std::vector<int> reset;
  if (pool.rows() == 0) {
    std::cerr << "warning: empty pool, dead-code reinitialization skipped\n";
    return reset;
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, pool.rows() - 1);
  for (int i = 0; i < cfg_.size; ++i) {
    if (usage_[i] >= cfg_.dead_threshold) continue;
    const auto row = pool.row(pick(rng));
    vectors_.row(i) = row;
    sum_.row(i) = row;
    count_(i) = 1.0;
    reset.push_back(i);
  }
  reset_usage();
  return reset;
}

void Codebook::save(const std::filesystem::path& ckpt, const std::filesystem::path& sidecar,
                    hierarchy::Level level) const {
  nn::ParameterSet<double> ps;
  ps.add("codebook.vectors", cfg_.size, cfg_.dim, nn::Init::Zeros, false).value = vectors_;
  ps.add("codebook.ema_sum", cfg_.size, cfg_.dim, nn::Init::Zeros, false).value = sum_;
  ps.add("codebook.ema_count", 1, cfg_.size, nn::Init::Zeros, false).value = count_.transpose();
  nn::save_checkpoint(ckpt, ps, {{"codebook", cfg_.to_json()}, {"level", hierarchy::level_name(level)}});
  std::ofstream out(sidecar);
  out << json{{"level", hierarchy::level_name(level)}, {"K", cfg_.size}, {"usage", usage_}}.dump(2) << '\n';
}

Codebook Codebook::load(const std::filesystem::path& ckpt) {
  const auto header = nn::read_checkpoint_header(ckpt);
  Codebook cb;
  cb.cfg_ = CodebookConfig::from_json(header.at("config").at("codebook"));
  nn::ParameterSet<double> ps;
  auto& v = ps.add("codebook.vectors", cb.cfg_.size, cb.cfg_.dim, nn::Init::Zeros, false);
  auto& s = ps.add("codebook.ema_sum", cb.cfg_.size, cb.cfg_.dim, nn::Init::Zeros, false);
  auto& c = ps.add("codebook.ema_count", 1, cb.cfg_.size, nn::Init::Zeros, false);
  nn::load_checkpoint(ckpt, ps);
  cb.vectors_ = v.value;
  cb.sum_ = s.value;
  cb.count_ = c.value.row(0).transpose();
  cb.usage_.assign(cb.cfg_.size, 0);
  return cb;
}

}  // namespace hnc::vq
