#include "hnc/vq/vqvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "hnc/nn/checkpoint.hpp"

namespace hnc::vq {

using nlohmann::json;
using nn::Segments;
using nn::Tape;
using nn::Var;

VqConfig VqConfig::defaults(Level level) {
  VqConfig c;
  c.level = level;
  c.codebook.size = default_codebook_size(level);
  return c;
}

json VqConfig::to_json() const {
  return {{"level", hierarchy::level_name(level)},
          {"codebook", codebook.to_json()},
          {"encoder", encoder.to_json()},
          {"decoder", decoder.to_json()},
          {"emb_dim", emb_dim},
          {"beta", beta},
          {"mask_min", mask_min},
          {"mask_max", mask_max},
          {"max_length", length_cap()}};
}

VqConfig VqConfig::from_json(const json& j) {
  VqConfig c = defaults(hierarchy::level_from_name(j.at("level").get<std::string>()));
  if (j.contains("codebook")) c.codebook = CodebookConfig::from_json(j["codebook"]);
  if (j.contains("encoder")) c.encoder = nn::BlockConfig::from_json(j["encoder"]);
  if (j.contains("decoder")) c.decoder = nn::BlockConfig::from_json(j["decoder"]);
  c.emb_dim = j.value("emb_dim", c.emb_dim);
  c.beta = j.value("beta", c.beta);
  c.mask_min = j.value("mask_min", c.mask_min);
  c.mask_max = j.value("mask_max", c.mask_max);
  c.max_length = j.value("max_length", c.max_length);
  return c;
}

std::vector<char> sample_mask(int length, double lo, double hi, std::mt19937_64& rng) {
  std::vector<char> mask(length, 0);
  if (length <= 0) return mask;
  if (length == 1) {
    mask[0] = 1;
    return mask;
  }
  std::uniform_real_distribution<double> ratio(lo, hi);
  const int n = std::clamp(static_cast<int>(std::lround(ratio(rng) * length)), 1, length - 1);
  std::vector<int> idx(length);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int i = 0; i < n; ++i) mask[idx[i]] = 1;
  return mask;
}

template <class T>
VqVae<T>::VqVae(VqConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), params_(seed), codebook_(cfg_.codebook, seed ^ 0x9e3779b97f4a7c15ULL) {
  const int d = cfg_.encoder.d_model;
  if (cfg_.decoder.d_model != d || cfg_.codebook.dim != d) {
    throw std::invalid_argument("encoder, decoder and codebook widths must agree");
  }
  const int w = hierarchy::tuple_width(cfg_.level);
  table_ = &params_.add("emb.table", hierarchy::kClasses, cfg_.emb_dim, nn::Init::Normal, false);
  mask_ = &params_.add("emb.mask", 1, cfg_.emb_dim, nn::Init::Normal, false);
  pos_ = &params_.add("emb.pos", cfg_.length_cap(), d, nn::Init::Normal, false);
  embed_mlp_ = nn::Mlp<T>(params_, "emb.mlp", w * cfg_.emb_dim, d, d);
  encoder_ = nn::TransformerStack<T>(params_, "enc", cfg_.encoder, false);
  decoder_ = nn::TransformerStack<T>(params_, "dec", cfg_.decoder, false);
  head_ = nn::Mlp<T>(params_, "head", d, d, w * hierarchy::kClasses);
}

template <class T>
void VqVae<T>::validate(const LevelTokens& item) const {
  if (item.level != cfg_.level) throw std::invalid_argument("level mismatch");
  if (item.length() < 1 || item.length() > cfg_.length_cap()) {
    throw std::invalid_argument(fmt::format("{} sequence length {} outside 1..{}", hierarchy::level_name(cfg_.level),
                                            item.length(), cfg_.length_cap()));
  }
  for (int v : item.values) {
    if (v < 0 || v >= hierarchy::kClasses) throw std::invalid_argument("class out of range");
    if (v == hierarchy::kSepClass && cfg_.level != Level::Loop) {
      throw std::invalid_argument("SEP is only valid at loop level");
    }
  }
}

template <class T>
Var VqVae<T>::embed(Tape<T>& t, const std::vector<LevelTokens>& batch, const std::vector<std::vector<char>>& masks) const {
  const int w = hierarchy::tuple_width(cfg_.level);
  std::vector<int> index, positions;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    validate(batch[b]);
    const auto& item = batch[b];
    for (int p = 0; p < item.length(); ++p) {
      const bool masked = !masks.empty() && masks[b][p];
      for (int s = 0; s < w; ++s) index.push_back(masked ? hierarchy::kClasses : item.values[p * w + s]);
      positions.push_back(p);
    }
  }
  const Var table = nn::concat_rows(t, {t.param(*table_), t.param(*mask_)});
  const int n = static_cast<int>(positions.size());
  const Var flat = nn::reshape(t, nn::gather_rows(t, table, index), n, w * cfg_.emb_dim);
  return nn::add(t, embed_mlp_(t, flat), nn::gather_rows(t, t.param(*pos_), positions));
}

namespace {

Segments segments_of(const std::vector<LevelTokens>& batch, int extra = 0) {
  std::vector<int> lengths;
  for (const auto& item : batch) lengths.push_back(item.length() + extra);
  return Segments::from_lengths(lengths);
}

}  // namespace

template <class T>
Var VqVae<T>::pooled(Tape<T>& t, const std::vector<LevelTokens>& batch) const {
  const auto segs = segments_of(batch);
  const Var x = embed(t, batch, {});
  return nn::segment_mean(t, encoder_.forward(t, x, segs, false), segs);
}

template <class T>
Var VqVae<T>::decode(Tape<T>& t, Var code_rows, const std::vector<LevelTokens>& batch,
                     const std::vector<std::vector<char>>& masks) const {
  const int bsz = static_cast<int>(batch.size());
  const auto segs = segments_of(batch);
  const Var tokens = embed(t, batch, masks);
  // Rows: codes [0, B), then tokens; reorder to [c_b, tokens_b...] per item.
  std::vector<int> order, keep;
  for (int b = 0; b < bsz; ++b) {
    order.push_back(b);
    for (int p = 0; p < segs.length(b); ++p) {
      keep.push_back(static_cast<int>(order.size()));
      order.push_back(bsz + segs.begin(b) + p);
    }
  }
  const Var x = nn::gather_rows(t, nn::concat_rows(t, {code_rows, tokens}), order);
  const Var y = decoder_.forward(t, x, segments_of(batch, 1), false);
  const Var logits = head_(t, nn::gather_rows(t, y, keep));
  const int w = hierarchy::tuple_width(cfg_.level);
  return nn::reshape(t, logits, segs.rows() * w, hierarchy::kClasses);
}

template <class T>
VqForward<T> VqVae<T>::forward(Tape<T>& t, const std::vector<LevelTokens>& batch,
                               const std::vector<std::vector<char>>& masks) const {
  if (masks.size() != batch.size()) throw std::invalid_argument("one mask per item");
  VqForward<T> out;
  const int bsz = static_cast<int>(batch.size());
  const int w = hierarchy::tuple_width(cfg_.level);
  out.pooled = pooled(t, batch);
  const auto& pv = t.value(out.pooled);
  out.code_vectors.resize(bsz, pv.cols());
  for (int b = 0; b < bsz; ++b) {
    const Eigen::RowVectorXd row = pv.row(b).template cast<double>();
    const auto a = codebook_.quantize(row);
    out.codes.push_back(a.index);
    out.code_vectors.row(b) = codebook_.vectors().row(a.index).template cast<T>();
    out.codebook_term += a.distance / bsz;
  }
  const Var c = nn::straight_through(t, out.pooled, out.code_vectors);
  out.logits = decode(t, c, batch, masks);

  std::vector<int> targets;
  std::vector<T> w_emd, w_ce;
  for (int b = 0; b < bsz; ++b) {
    for (int p = 0; p < batch[b].length(); ++p) {
      const bool m = masks[b][p];
      out.masked_tokens += m;
      for (int s = 0; s < w; ++s) {
        const int target = batch[b].values[p * w + s];
        targets.push_back(target);
        const bool ce = cfg_.level == Level::Loop && target == hierarchy::kSepClass;
        w_emd.push_back(m && !ce ? T(1) : T(0));
        w_ce.push_back(m && ce ? T(1) : T(0));
        out.masked_slots += m;
      }
    }
  }
  const T norm = out.masked_slots > 0 ? T(1) / static_cast<T>(out.masked_slots) : T(0);
  for (auto& v : w_emd) v *= norm;
  for (auto& v : w_ce) v *= norm;
  const Var recon = nn::add(t, nn::squared_emd(t, out.logits, targets, w_emd),
                            nn::cross_entropy(t, out.logits, targets, w_ce));
  const Var commit = nn::squared_distance(t, out.pooled, out.code_vectors, static_cast<T>(cfg_.beta / bsz));
  out.loss = nn::add(t, recon, commit);
  out.reconstruction = static_cast<double>(t.value(recon)(0, 0));
  out.commitment = static_cast<double>(t.value(commit)(0, 0));

  const auto& lg = t.value(out.logits);
  int row = 0;
  for (int b = 0; b < bsz; ++b) {
    for (int p = 0; p < batch[b].length(); ++p) {
      bool all = true;
      for (int s = 0; s < w; ++s, ++row) {
        Eigen::Index arg;
        lg.row(row).maxCoeff(&arg);
        const bool ok = arg == targets[row];
        all = all && ok;
        if (masks[b][p]) out.correct_slots += ok;
      }
      if (masks[b][p]) out.correct_tokens += all;
    }
  }
  return out;
}

template <class T>
RowMatrix VqVae<T>::pooled_values(const std::vector<LevelTokens>& items) const {
  RowMatrix out(static_cast<Eigen::Index>(items.size()), cfg_.encoder.d_model);
  constexpr std::size_t chunk = 64;
  for (std::size_t start = 0; start < items.size(); start += chunk) {
    const std::vector<LevelTokens> part(items.begin() + start, items.begin() + std::min(items.size(), start + chunk));
    Tape<T> t(false);
    const auto& v = t.value(pooled(t, part));
    out.middleRows(start, part.size()) = v.template cast<double>();
  }
  return out;
}

template <class T>
std::vector<int> VqVae<T>::encode(const std::vector<LevelTokens>& items) const {
  std::vector<int> codes;
  for (const auto& a : codebook_.quantize_rows(pooled_values(items))) codes.push_back(a.index);
  return codes;
}

template <class T>
void VqVae<T>::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(dir / "model.ckpt", params_, cfg_.to_json());
  codebook_.save(dir / "codebook.ckpt", dir / "codebook.json", cfg_.level);
}

template <class T>
VqVae<T> VqVae<T>::load(const std::filesystem::path& dir) {
  const auto header = nn::read_checkpoint_header(dir / "model.ckpt");
  VqVae<T> m(VqConfig::from_json(header.at("config")));
  nn::load_checkpoint(dir / "model.ckpt", m.params_);
  m.codebook_ = Codebook::load(dir / "codebook.ckpt");
  return m;
}

template class VqVae<float>;
template class VqVae<double>;

}  // namespace hnc::vq
