#include "hnc/gen/cascade.hpp"

#include <stdexcept>

#include <fmt/format.h>

#include "hnc/nn/checkpoint.hpp"
#include "hnc/nn/ops.hpp"

namespace hnc::gen {

using nlohmann::json;
using nn::Segments;
using nn::Tape;
using nn::Var;

namespace {

constexpr int kExtPerStep = 9;

json caps_json(const cad::Caps& c) {
  return {{"max_steps", c.max_steps}, {"max_loops", c.max_loops}, {"max_curves", c.max_curves},
          {"max_tokens", c.max_tokens}};
}

cad::Caps caps_from(const json& j) {
  cad::Caps c;
  c.max_steps = j.value("max_steps", c.max_steps);
  c.max_loops = j.value("max_loops", c.max_loops);
  c.max_curves = j.value("max_curves", c.max_curves);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  return c;
}

}  // namespace

json CascadeConfig::to_json() const {
  return {{"vocab", vocab.to_json()},
          {"encoder", encoder.to_json()},
          {"code_decoder", code_decoder.to_json()},
          {"cad_decoder", cad_decoder.to_json()},
          {"caps", caps_json(caps)}};
}

CascadeConfig CascadeConfig::from_json(const json& j) {
  CascadeConfig c;
  c.vocab = CodeVocab::from_json(j.at("vocab"));
  if (j.contains("encoder")) c.encoder = nn::BlockConfig::from_json(j["encoder"]);
  if (j.contains("code_decoder")) c.code_decoder = nn::BlockConfig::from_json(j["code_decoder"]);
  if (j.contains("cad_decoder")) c.cad_decoder = nn::BlockConfig::from_json(j["cad_decoder"]);
  if (j.contains("caps")) c.caps = caps_from(j["caps"]);
  return c;
}

vq::RowMatrix stack_codebooks(const vq::Codebook& loop, const vq::Codebook& profile, const vq::Codebook& solid) {
  if (loop.dim() != profile.dim() || loop.dim() != solid.dim()) {
    throw std::invalid_argument("codebook widths differ");
  }
  vq::RowMatrix out(loop.size() + profile.size() + solid.size(), loop.dim());
  out << loop.vectors(), profile.vectors(), solid.vectors();
  return out;
}

template <class T>
Cascade<T>::Cascade(CascadeConfig cfg, const vq::RowMatrix& code_table, std::uint64_t seed)
    : cfg_(std::move(cfg)), params_(seed) {
  const int d = cfg_.d_model();
  if (cfg_.encoder.d_model != d || cfg_.cad_decoder.d_model != d) {
    throw std::invalid_argument("encoder and decoder widths must agree");
  }
  if (code_table.rows() != cfg_.vocab.sep() || code_table.cols() != d) {
    throw std::invalid_argument(fmt::format("code table is {}x{}, expected {}x{}", code_table.rows(),
                                            code_table.cols(), cfg_.vocab.sep(), d));
  }
  code_table_ = code_table.cast<T>();
  const int max_tokens = cfg_.caps.max_tokens;
  enc_table_ = &params_.add("enc.table", cad::tok::kVocabSize, d, nn::Init::Normal, false);
  geo_pos_ = &params_.add("enc.geo.pos", max_tokens, d, nn::Init::Normal, false);
  ext_pos_ = &params_.add("enc.ext.pos", kExtPerStep * cfg_.caps.max_steps, d, nn::Init::Normal, false);
  geo_enc_ = nn::TransformerStack<T>(params_, "enc.geo", cfg_.encoder, false);
  ext_enc_ = nn::TransformerStack<T>(params_, "enc.ext", cfg_.encoder, false);

  code_special_ = &params_.add("code.special", 3, d, nn::Init::Normal, false);
  code_pos_ = &params_.add("code.pos", kMaxCodeTokens, d, nn::Init::Normal, false);
  code_dec_ = nn::TransformerStack<T>(params_, "code", cfg_.code_decoder, true);
  code_out_ = nn::Linear<T>(params_, "code.out", d, cfg_.vocab.size());

  cad_table_ = &params_.add("cad.table", cad::tok::kVocabSize + 1, d, nn::Init::Normal, false);
  cad_pos_ = &params_.add("cad.pos", max_tokens, d, nn::Init::Normal, false);
  source_ = &params_.add("cad.source", 2, d, nn::Init::Normal, false);
  cad_dec_ = nn::TransformerStack<T>(params_, "cad", cfg_.cad_decoder, true);
  cad_out_ = nn::Linear<T>(params_, "cad.out", d, cad::tok::kVocabSize);
}

template <class T>
nn::Memory<T> Cascade<T>::encode(Tape<T>& t, const std::vector<cad::CadModel>& partials) const {
  const int d = cfg_.d_model();
  std::vector<int> geo_tokens, geo_pos, ext_tokens, ext_pos, geo_len, ext_len;
  for (const auto& p : partials) {
    if (p.steps.empty()) {
      geo_len.push_back(0);
      ext_len.push_back(0);
      continue;
    }
    const auto split = cad::split_tokens(cad::tokenize(p, cfg_.caps));
    for (std::size_t i = 0; i < split.geometry.size(); ++i) {
      geo_tokens.push_back(split.geometry[i]);
      geo_pos.push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < split.extrusion.size(); ++i) {
      ext_tokens.push_back(split.extrusion[i]);
      ext_pos.push_back(static_cast<int>(i));
    }
    geo_len.push_back(static_cast<int>(split.geometry.size()));
    ext_len.push_back(static_cast<int>(split.extrusion.size()));
  }
  nn::Memory<T> mem;
  std::vector<int> lengths;
  for (std::size_t b = 0; b < partials.size(); ++b) lengths.push_back(geo_len[b] + ext_len[b]);
  mem.segs = Segments::from_lengths(lengths);
  if (geo_tokens.empty()) {
    mem.value = t.constant(Mat::Zero(0, d));
    return mem;
  }
  const Var table = t.param(*enc_table_);
  auto run = [&](const nn::TransformerStack<T>& stack, nn::Parameter<T>& pos, const std::vector<int>& tokens,
                 const std::vector<int>& positions, const std::vector<int>& lens) {
    const Var x = nn::add(t, nn::gather_rows(t, table, tokens), nn::gather_rows(t, t.param(pos), positions));
    return stack.forward(t, x, Segments::from_lengths(lens), false);
  };
  const Var geo = run(geo_enc_, *geo_pos_, geo_tokens, geo_pos, geo_len);
  const Var ext = run(ext_enc_, *ext_pos_, ext_tokens, ext_pos, ext_len);
  // Interleave per item: geometry rows then extrusion rows.
  const int n_geo = static_cast<int>(geo_tokens.size());
  std::vector<int> order;
  int g = 0, e = 0;
  for (std::size_t b = 0; b < partials.size(); ++b) {
    for (int i = 0; i < geo_len[b]; ++i) order.push_back(g++);
    for (int i = 0; i < ext_len[b]; ++i) order.push_back(n_geo + e++);
  }
  mem.value = nn::gather_rows(t, nn::concat_rows(t, {geo, ext}), order);
  return mem;
}

template <class T>
Var Cascade<T>::code_rows(Tape<T>& t, const std::vector<int>& tokens) const {
  // Frozen rows for codes, learned rows for SEP / EOS / start (token < 0).
  const auto& v = cfg_.vocab;
  Mat frozen(0, cfg_.d_model());
  std::vector<int> index;
  int n_codes = 0;
  for (int tok : tokens) {
    if (tok >= 0 && v.level_of(tok)) ++n_codes;
  }
  frozen.resize(n_codes, cfg_.d_model());
  int r = 0;
  for (int tok : tokens) {
    if (tok >= 0 && v.level_of(tok)) {
      frozen.row(r) = code_table_.row(tok);
      index.push_back(r++);
    } else if (tok == v.sep()) {
      index.push_back(n_codes);
    } else if (tok == v.eos()) {
      index.push_back(n_codes + 1);
    } else if (tok < 0) {
      index.push_back(n_codes + 2);
    } else {
      throw std::invalid_argument(fmt::format("code token {} outside the vocabulary", tok));
    }
  }
  return nn::gather_rows(t, nn::concat_rows(t, {t.constant(frozen), t.param(*code_special_)}), index);
}

template <class T>
Var Cascade<T>::embed_codes(Tape<T>& t, const std::vector<int>& tokens, const std::vector<int>& positions) const {
  return nn::add(t, code_rows(t, tokens), nn::gather_rows(t, t.param(*code_pos_), positions));
}

template <class T>
Var Cascade<T>::code_logits(Tape<T>& t, const nn::Memory<T>& memory,
                            const std::vector<CodeTreeSequence>& targets) const {
  std::vector<int> prev, positions, lengths;
  for (const auto& s : targets) {
    if (s.empty() || static_cast<int>(s.size()) > kMaxCodeTokens) {
      throw std::invalid_argument(fmt::format("code tree length {} outside 1..{}", s.size(), kMaxCodeTokens));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      prev.push_back(i == 0 ? -1 : s[i - 1]);
      positions.push_back(static_cast<int>(i));
    }
    lengths.push_back(static_cast<int>(s.size()));
  }
  const Var x = embed_codes(t, prev, positions);
  const Var h = code_dec_.forward(t, x, Segments::from_lengths(lengths), true, &memory);
  return code_out_(t, h);
}

template <class T>
nn::Memory<T> Cascade<T>::cad_memory(Tape<T>& t, const nn::Memory<T>& encoded,
                                     const std::vector<CodeTreeSequence>& codes) const {
  if (static_cast<int>(codes.size()) != encoded.segs.count()) throw std::invalid_argument("one code tree per item");
  std::vector<int> tokens, positions;
  for (const auto& s : codes) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      tokens.push_back(s[i]);
      positions.push_back(static_cast<int>(i));
    }
  }
  const Var source = t.param(*source_);
  const int n_enc = encoded.segs.rows();
  std::vector<Var> parts;
  if (n_enc > 0) {
    parts.push_back(nn::add_row(t, encoded.value, nn::gather_rows(t, source, {0})));
  }
  if (!tokens.empty()) {
    parts.push_back(nn::add_row(t, embed_codes(t, tokens, positions), nn::gather_rows(t, source, {1})));
  }
  nn::Memory<T> mem;
  std::vector<int> lengths, order;
  int c = 0;
  for (int b = 0; b < encoded.segs.count(); ++b) {
    for (int i = 0; i < encoded.segs.length(b); ++i) order.push_back(encoded.segs.begin(b) + i);
    for (std::size_t i = 0; i < codes[b].size(); ++i) order.push_back(n_enc + c++);
    lengths.push_back(encoded.segs.length(b) + static_cast<int>(codes[b].size()));
  }
  mem.segs = Segments::from_lengths(lengths);
  if (parts.empty()) {
    mem.value = t.constant(Mat::Zero(0, cfg_.d_model()));
  } else {
    mem.value = nn::gather_rows(t, parts.size() == 1 ? parts[0] : nn::concat_rows(t, parts), order);
  }
  return mem;
}

template <class T>
Var Cascade<T>::cad_logits(Tape<T>& t, const nn::Memory<T>& memory,
                           const std::vector<cad::TokenSequence>& targets) const {
  std::vector<int> prev, positions, lengths;
  for (const auto& s : targets) {
    if (s.empty() || static_cast<int>(s.size()) > cfg_.caps.max_tokens) {
      throw std::invalid_argument(fmt::format("token sequence length {} outside 1..{}", s.size(), cfg_.caps.max_tokens));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      prev.push_back(i == 0 ? cad::tok::kVocabSize : s[i - 1]);
      positions.push_back(static_cast<int>(i));
    }
    lengths.push_back(static_cast<int>(s.size()));
  }
  const Var x = nn::add(t, nn::gather_rows(t, t.param(*cad_table_), prev),
                        nn::gather_rows(t, t.param(*cad_pos_), positions));
  const Var h = cad_dec_.forward(t, x, Segments::from_lengths(lengths), true, &memory);
  return cad_out_(t, h);
}

template <class T>
typename Cascade<T>::Mat Cascade<T>::code_input(const std::vector<int>& prev, const std::vector<int>& positions) const {
  Tape<T> t;
  return t.value(embed_codes(t, prev, positions));
}

template <class T>
typename Cascade<T>::Mat Cascade<T>::cad_input(const std::vector<int>& prev, const std::vector<int>& positions) const {
  Mat x(static_cast<Eigen::Index>(prev.size()), cfg_.d_model());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const int tok = prev[i] < 0 ? cad::tok::kVocabSize : prev[i];
    x.row(i) = cad_table_->value.row(tok) + cad_pos_->value.row(positions[i]);
  }
  return x;
}

template <class T>
typename Cascade<T>::Mat Cascade<T>::code_head(const Mat& hidden) const {
  Mat out = hidden * code_out_.w->value;
  out.rowwise() += code_out_.b->value.row(0);
  return out;
}

template <class T>
typename Cascade<T>::Mat Cascade<T>::cad_head(const Mat& hidden) const {
  Mat out = hidden * cad_out_.w->value;
  out.rowwise() += cad_out_.b->value.row(0);
  return out;
}

template <class T>
void Cascade<T>::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(dir / "cascade.ckpt", params_, cfg_.to_json());
  nn::ParameterSet<T> codes;
  codes.add("codes.table", static_cast<int>(code_table_.rows()), static_cast<int>(code_table_.cols()),
            nn::Init::Zeros, false)
      .value = code_table_;
  nn::save_checkpoint(dir / "codes.ckpt", codes, cfg_.vocab.to_json());
}

template <class T>
Cascade<T> Cascade<T>::load(const std::filesystem::path& dir) {
  const auto header = nn::read_checkpoint_header(dir / "cascade.ckpt");
  const auto cfg = CascadeConfig::from_json(header.at("config"));
  nn::ParameterSet<T> codes;
  auto& table = codes.add("codes.table", cfg.vocab.sep(), cfg.d_model(), nn::Init::Zeros, false);
  nn::load_checkpoint(dir / "codes.ckpt", codes);
  Cascade<T> c(cfg, table.value.template cast<double>(), 0);
  nn::load_checkpoint(dir / "cascade.ckpt", c.params_);
  return c;
}

template class Cascade<float>;
template class Cascade<double>;

}  // namespace hnc::gen
