#include "hnc/gen/workflows.hpp"

#include <fmt/format.h>

#include "hnc/cad/grammar.hpp"
#include "hnc/cad/json_io.hpp"
#include "hnc/nn/ops.hpp"
#include "hnc/nn/sampling.hpp"

namespace hnc::gen {

using nlohmann::json;
using Mat = nn::Matrix<float>;

namespace {

std::mt19937_64 stream_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

std::vector<Mat> split_memory(const nn::Tape<float>& t, const nn::Memory<float>& mem) {
  std::vector<Mat> out;
  const auto& v = t.value(mem.value);
  for (int b = 0; b < mem.segs.count(); ++b) out.push_back(v.middleRows(mem.segs.begin(b), mem.segs.length(b)));
  return out;
}

std::vector<double> row_logits(const Mat& logits, Eigen::Index r) {
  std::vector<double> out(logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) out[c] = logits(r, c);
  return out;
}

// Lockstep incremental decoding; `Grammar` supplies allowed(), advance(), done().
template <class Grammar, class Input, class Head>
std::vector<std::vector<int>> decode(const nn::TransformerStack<float>& stack, const std::vector<Mat>& memories,
                                     std::vector<Grammar> grammars, int capacity, double p, std::uint64_t seed,
                                     const Input& input, const Head& head) {
  const std::size_t n = memories.size();
  std::vector<nn::DecodeState<float>> states;
  std::vector<std::mt19937_64> rngs;
  for (std::size_t i = 0; i < n; ++i) {
    states.push_back(stack.start(memories[i], capacity));
    rngs.push_back(stream_rng(seed, i));
  }
  std::vector<std::vector<int>> out(n);
  std::vector<int> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = static_cast<int>(i);
  for (int pos = 0; pos < capacity && !active.empty(); ++pos) {
    std::vector<int> prev, positions;
    std::vector<nn::DecodeState<float>*> st;
    for (int i : active) {
      prev.push_back(out[i].empty() ? -1 : out[i].back());
      positions.push_back(pos);
      st.push_back(&states[i]);
    }
    const Mat logits = head(stack.step(input(prev, positions), st));
    std::vector<int> still;
    for (std::size_t r = 0; r < active.size(); ++r) {
      const int i = active[r];
      const auto probs = nn::masked_softmax(row_logits(logits, static_cast<Eigen::Index>(r)), grammars[i].allowed());
      const int tok = nn::nucleus_sample(probs, p, rngs[i]);
      grammars[i].advance(tok);
      out[i].push_back(tok);
      if (!grammars[i].done()) still.push_back(i);
    }
    active = std::move(still);
  }
  return out;
}

}  // namespace

std::vector<CodeTreeSequence> generate_code_trees(const Cascade<float>& model,
                                                  const std::vector<cad::CadModel>& partials, double p,
                                                  std::uint64_t seed) {
  if (partials.empty()) return {};
  nn::Tape<float> t;
  const auto memories = split_memory(t, model.encode(t, partials));
  const auto& caps = model.config().caps;
  std::vector<CodeGrammar> grammars(partials.size(), CodeGrammar(model.config().vocab, caps.max_steps, caps.max_loops));
  return decode(
      model.code_decoder(), memories, grammars, kMaxCodeTokens, p, seed,
      [&](const std::vector<int>& prev, const std::vector<int>& pos) { return model.code_input(prev, pos); },
      [&](const Mat& h) { return model.code_head(h); });
}

std::vector<cad::TokenSequence> generate_token_sequences(const Cascade<float>& model,
                                                         const std::vector<cad::CadModel>& partials,
                                                         const std::vector<CodeTreeSequence>& codes, double p,
                                                         std::uint64_t seed) {
  if (partials.size() != codes.size()) throw std::invalid_argument("one code tree per partial");
  if (partials.empty()) return {};
  for (const auto& c : codes) deserialize(c, model.config().vocab);
  nn::Tape<float> t;
  const auto memories = split_memory(t, model.cad_memory(t, model.encode(t, partials), codes));
  const auto& caps = model.config().caps;
  std::vector<cad::Grammar> grammars(partials.size(), cad::Grammar(caps));
  return decode(
      model.cad_decoder(), memories, grammars, caps.max_tokens, p, seed,
      [&](const std::vector<int>& prev, const std::vector<int>& pos) { return model.cad_input(prev, pos); },
      [&](const Mat& h) { return model.cad_head(h); });
}

nn::Matrix<double> cad_distributions(const Cascade<float>& model, const cad::CadModel& partial,
                                     const CodeTreeSequence& codes, const cad::TokenSequence& tokens) {
  nn::Tape<float> t;
  const auto mem = model.cad_memory(t, model.encode(t, {partial}), {codes});
  const auto logits = model.cad_logits(t, mem, {tokens});
  return nn::softmax_rows(nn::Matrix<double>(t.value(logits).cast<double>()));
}

namespace {

Generated parse_all(const std::vector<cad::TokenSequence>& seqs, const std::vector<CodeTreeSequence>& codes,
                    const cad::Caps& caps) {
  Generated g;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    try {
      g.models.push_back(cad::detokenize(seqs[i], caps));
      g.codes.push_back(codes[i]);
    } catch (const cad::ValidationError&) {
      ++g.dropped;
    }
  }
  return g;
}

}  // namespace

Generated sample_unconditional(const Cascade<float>& model, int n, double p_code, double p_model,
                               std::uint64_t seed) {
  const std::vector<cad::CadModel> empty(std::max(0, n));
  const auto codes = generate_code_trees(model, empty, p_code, seed);
  const auto seqs = generate_token_sequences(model, empty, codes, p_model, seed ^ 0x2545f4914f6cdd1dULL);
  return parse_all(seqs, codes, model.config().caps);
}

Generated autocomplete(const Cascade<float>& model, const cad::CadModel& partial, int n_variants, double p_code,
                       std::uint64_t seed) {
  const std::vector<cad::CadModel> partials(std::max(0, n_variants), partial);
  const auto codes = generate_code_trees(model, partials, p_code, seed);
  const auto seqs = generate_token_sequences(model, partials, codes, 0.0, seed);
  return parse_all(seqs, codes, model.config().caps);
}

cad::CadModel regenerate_with_codes(const Cascade<float>& model, const cad::CadModel& partial,
                                    const CodeTreeSequence& codes) {
  const auto seqs = generate_token_sequences(model, {partial}, {codes}, 0.0, 0);
  try {
    return cad::detokenize(seqs[0], model.config().caps);
  } catch (const cad::ValidationError& e) {
    throw DecodeError(fmt::format("decoded sequence does not parse: {}", e.what()), 1);
  }
}

namespace {

const char* mode_name(GenerationRequest::Mode m) {
  switch (m) {
    case GenerationRequest::Mode::Unconditional: return "unconditional";
    case GenerationRequest::Mode::Autocomplete: return "autocomplete";
    case GenerationRequest::Mode::Edit: return "edit";
    case GenerationRequest::Mode::Regenerate: return "regenerate";
  }
  return "?";
}

}  // namespace

GenerationRequest GenerationRequest::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("request must be a JSON object");
  GenerationRequest r;
  const auto mode = j.value("mode", std::string("unconditional"));
  if (mode == "unconditional") {
    r.mode = Mode::Unconditional;
  } else if (mode == "autocomplete") {
    r.mode = Mode::Autocomplete;
  } else if (mode == "edit") {
    r.mode = Mode::Edit;
  } else if (mode == "regenerate") {
    r.mode = Mode::Regenerate;
  } else {
    throw std::invalid_argument(fmt::format("unknown mode '{}'", mode));
  }
  if (j.contains("partial") && !j["partial"].is_null()) r.partial = cad::model_from_json(j["partial"]);
  if (j.contains("codes") && !j["codes"].is_null()) r.codes = j["codes"].get<CodeTreeSequence>();
  r.p = j.value("p", r.p);
  r.seed = j.value("seed", r.seed);
  r.n = j.value("n", r.n);
  if (r.n < 0 || r.n > 1000) throw std::invalid_argument("n must be in 0..1000");
  if ((r.mode == Mode::Autocomplete || r.mode == Mode::Regenerate) && !r.partial) {
    throw std::invalid_argument(fmt::format("{} requires a partial model", mode));
  }
  if ((r.mode == Mode::Edit || r.mode == Mode::Regenerate) && !r.codes) {
    throw std::invalid_argument(fmt::format("{} requires codes", mode));
  }
  return r;
}

json GenerationRequest::to_json() const {
  json j{{"mode", mode_name(mode)}, {"p", p}, {"seed", seed}, {"n", n}};
  if (partial) j["partial"] = cad::to_json(*partial);
  if (codes) j["codes"] = *codes;
  return j;
}

json to_json(const Generated& g) {
  json models = json::array();
  for (const auto& m : g.models) models.push_back(cad::to_json(m));
  return {{"models", models}, {"codes", g.codes}, {"dropped", g.dropped}};
}

Generated run_request(const Cascade<float>& model, const GenerationRequest& req) {
  switch (req.mode) {
    case GenerationRequest::Mode::Unconditional: return sample_unconditional(model, req.n, req.p, req.p, req.seed);
    case GenerationRequest::Mode::Autocomplete: return autocomplete(model, *req.partial, req.n, req.p, req.seed);
    case GenerationRequest::Mode::Edit:
    case GenerationRequest::Mode::Regenerate: {
      const cad::CadModel partial = req.partial.value_or(cad::CadModel{});
      Generated g;
      g.models.push_back(regenerate_with_codes(model, partial, *req.codes));
      g.codes.push_back(*req.codes);
      return g;
    }
  }
  return {};
}

}  // namespace hnc::gen
