#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "json.hpp"

#include "hnc/hierarchy/properties.hpp"
#include "hnc/nn/layers.hpp"
#include "hnc/vq/codebook.hpp"

namespace hnc::vq {

using hierarchy::Level;
using hierarchy::LevelTokens;

template <class T>
using Matrix = nn::Matrix<T>;

struct VqConfig {
  Level level = Level::Loop;
  CodebookConfig codebook;
  nn::BlockConfig encoder{256, 512, 8, 0.1, 4, true};
  nn::BlockConfig decoder{256, 512, 8, 0.1, 4, true};
  int emb_dim = 32;
  double beta = 0.25;
  double mask_min = 0.3;
  double mask_max = 0.7;
  int max_length = 0;  // 0: level default

  static VqConfig defaults(Level level);
  int length_cap() const { return max_length > 0 ? max_length : hierarchy::max_length(level); }
  nlohmann::json to_json() const;
  static VqConfig from_json(const nlohmann::json& j);
};

// Per-example mask with ratio drawn uniformly from [lo, hi]; when the length
// is at least 2 there is at least one masked and one unmasked position.
std::vector<char> sample_mask(int length, double lo, double hi, std::mt19937_64& rng);

template <class T>
struct VqForward {
  nn::Var loss;             // reconstruction + commitment
  nn::Var logits;           // (positions * width) x 65
  nn::Var pooled;           // batch x d
  Matrix<T> code_vectors;   // batch x d
  std::vector<int> codes;
  double reconstruction = 0;
  double commitment = 0;
  double codebook_term = 0;  // ||sg(pooled) - c||^2, reported only
  int masked_slots = 0, correct_slots = 0;
  int masked_tokens = 0, correct_tokens = 0;
};

template <class T>
class VqVae {
 public:
  explicit VqVae(VqConfig cfg, std::uint64_t seed = 0);

  // Per-scalar 32-D lookups concatenated per position, shared 2-layer MLP,
  // plus positional embeddings. Masked positions use the mask token for
  // every scalar.
  nn::Var embed(nn::Tape<T>& t, const std::vector<LevelTokens>& batch,
                const std::vector<std::vector<char>>& masks) const;
  // Mean of the final encoder outputs per item.
  nn::Var pooled(nn::Tape<T>& t, const std::vector<LevelTokens>& batch) const;
  // Decoder over [c; masked embeddings]; returns (positions * width) x 65 logits.
  nn::Var decode(nn::Tape<T>& t, nn::Var code_rows, const std::vector<LevelTokens>& batch,
                 const std::vector<std::vector<char>>& masks) const;

  // Full training forward. Loss terms are averaged over masked slots and
  // over the batch respectively. Loop-level slots whose target is SEP use
  // cross entropy, all others the squared EMD loss.
  VqForward<T> forward(nn::Tape<T>& t, const std::vector<LevelTokens>& batch,
                       const std::vector<std::vector<char>>& masks) const;

  std::vector<int> encode(const std::vector<LevelTokens>& items) const;
  RowMatrix pooled_values(const std::vector<LevelTokens>& items) const;

  const VqConfig& config() const { return cfg_; }
  nn::ParameterSet<T>& params() { return params_; }
  Codebook& codebook() { return codebook_; }
  const Codebook& codebook() const { return codebook_; }

  // model.ckpt, codebook.ckpt, codebook.json in `dir`.
  void save(const std::filesystem::path& dir) const;
  static VqVae load(const std::filesystem::path& dir);

 private:
  void validate(const LevelTokens& item) const;

  VqConfig cfg_;
  nn::ParameterSet<T> params_;
  nn::Parameter<T>* table_ = nullptr;  // 65 x emb
  nn::Parameter<T>* mask_ = nullptr;   // 1 x emb
  nn::Parameter<T>* pos_ = nullptr;    // cap x d
  nn::Mlp<T> embed_mlp_;
  nn::TransformerStack<T> encoder_, decoder_;
  nn::Mlp<T> head_;
  Codebook codebook_;
};

extern template class VqVae<float>;
extern template class VqVae<double>;

}  // namespace hnc::vq
