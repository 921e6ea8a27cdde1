#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "hnc/cad/model.hpp"
#include "hnc/cad/tokens.hpp"
#include "hnc/gen/code_tree.hpp"
#include "hnc/nn/layers.hpp"
#include "hnc/vq/codebook.hpp"

namespace hnc::gen {

struct CascadeConfig {
  CodeVocab vocab;
  nn::BlockConfig encoder{256, 512, 8, 0.1, 6, true};       // each of the two model encoders
  nn::BlockConfig code_decoder{256, 512, 8, 0.1, 6, true};  // G_code
  nn::BlockConfig cad_decoder{256, 512, 8, 0.1, 6, true};   // G_cad
  cad::Caps caps;

  int d_model() const { return code_decoder.d_model; }
  nlohmann::json to_json() const;
  static CascadeConfig from_json(const nlohmann::json& j);
};

// Frozen code vectors of the three codebooks stacked in vocabulary order
// (loop, profile, solid); one row per code.
vq::RowMatrix stack_codebooks(const vq::Codebook& loop, const vq::Codebook& profile, const vq::Codebook& solid);

// Model encoder, code-tree generator G_code and model generator G_cad.
template <class T>
class Cascade {
 public:
  using Mat = nn::Matrix<T>;

  Cascade() = default;
  Cascade(CascadeConfig cfg, const vq::RowMatrix& code_table, std::uint64_t seed = 0);

  // Geometry and extrusion tokens of each partial, encoded separately and
  // concatenated per item. Empty partials give empty segments.
  nn::Memory<T> encode(nn::Tape<T>& t, const std::vector<cad::CadModel>& partials) const;

  // Codebook vector (frozen) or learned SEP/EOS embedding plus the positional
  // embedding, one row per token.
  nn::Var embed_codes(nn::Tape<T>& t, const std::vector<int>& tokens, const std::vector<int>& positions) const;

  // Teacher-forced logits; rows follow the concatenated targets.
  nn::Var code_logits(nn::Tape<T>& t, const nn::Memory<T>& memory,
                      const std::vector<CodeTreeSequence>& targets) const;
  // G_cad memory: [encoder memory + source embedding; code embeddings + source embedding].
  nn::Memory<T> cad_memory(nn::Tape<T>& t, const nn::Memory<T>& encoded,
                           const std::vector<CodeTreeSequence>& codes) const;
  nn::Var cad_logits(nn::Tape<T>& t, const nn::Memory<T>& memory,
                     const std::vector<cad::TokenSequence>& targets) const;

  // Decoder inputs for incremental decoding: token (or start when < 0) at
  // the given position.
  Mat code_input(const std::vector<int>& prev, const std::vector<int>& positions) const;
  Mat cad_input(const std::vector<int>& prev, const std::vector<int>& positions) const;
  Mat code_head(const Mat& hidden) const;
  Mat cad_head(const Mat& hidden) const;
  const nn::TransformerStack<T>& code_decoder() const { return code_dec_; }
  const nn::TransformerStack<T>& cad_decoder() const { return cad_dec_; }

  const CascadeConfig& config() const { return cfg_; }
  nn::ParameterSet<T>& params() { return params_; }
  const nn::ParameterSet<T>& params() const { return params_; }
  const Mat& code_table() const { return code_table_; }

  // cascade.ckpt holds the trained parameters, codes.ckpt the frozen table.
  void save(const std::filesystem::path& dir) const;
  static Cascade load(const std::filesystem::path& dir);

 private:
  nn::Var code_rows(nn::Tape<T>& t, const std::vector<int>& tokens) const;

  CascadeConfig cfg_;
  nn::ParameterSet<T> params_;
  Mat code_table_;
  // Model encoder.
  nn::Parameter<T>* geo_pos_ = nullptr;
  nn::Parameter<T>* ext_pos_ = nullptr;
  nn::Parameter<T>* enc_table_ = nullptr;  // shared by both encoders
  nn::TransformerStack<T> geo_enc_, ext_enc_;
  // G_code.
  nn::Parameter<T>* code_special_ = nullptr;  // SEP, EOS, start
  nn::Parameter<T>* code_pos_ = nullptr;
  nn::TransformerStack<T> code_dec_;
  nn::Linear<T> code_out_;
  // G_cad.
  nn::Parameter<T>* cad_table_ = nullptr;  // vocabulary plus a start row
  nn::Parameter<T>* cad_pos_ = nullptr;
  nn::Parameter<T>* source_ = nullptr;  // 2 x d: encoder memory, code memory
  nn::TransformerStack<T> cad_dec_;
  nn::Linear<T> cad_out_;
};

extern template class Cascade<float>;
extern template class Cascade<double>;

}  // namespace hnc::gen
