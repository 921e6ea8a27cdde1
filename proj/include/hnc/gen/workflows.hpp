#pragma once

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnc/gen/cascade.hpp"

namespace hnc::gen {

// Grammar-constrained incremental decoding. Every stream has its own RNG
// seeded from (seed, stream index), so results do not depend on batching.
// p <= 0 decodes greedily.
std::vector<CodeTreeSequence> generate_code_trees(const Cascade<float>& model,
                                                  const std::vector<cad::CadModel>& partials, double p,
                                                  std::uint64_t seed);
std::vector<cad::TokenSequence> generate_token_sequences(const Cascade<float>& model,
                                                         const std::vector<cad::CadModel>& partials,
                                                         const std::vector<CodeTreeSequence>& codes, double p,
                                                         std::uint64_t seed);

// Next-token distributions of G_cad under teacher forcing, one row per
// position of `tokens` (softmax over the full vocabulary).
nn::Matrix<double> cad_distributions(const Cascade<float>& model, const cad::CadModel& partial,
                                     const CodeTreeSequence& codes, const cad::TokenSequence& tokens);

struct Generated {
  std::vector<cad::CadModel> models;
  std::vector<CodeTreeSequence> codes;  // parallel to models
  int dropped = 0;                      // decodes that failed to parse
};

// Samples code trees (p_code) and models (p_model) from empty memory.
Generated sample_unconditional(const Cascade<float>& model, int n, double p_code, double p_model,
                               std::uint64_t seed);
// Code trees sampled from the partial, models decoded greedily.
Generated autocomplete(const Cascade<float>& model, const cad::CadModel& partial, int n_variants, double p_code,
                       std::uint64_t seed);
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, int dropped) : std::runtime_error(what), dropped_(dropped) {}
  int dropped() const { return dropped_; }

 private:
  int dropped_;
};

// Greedy decode conditioned on the partial and given codes. Throws
// CodeTreeError for malformed codes and DecodeError when the decode does not
// parse.
cad::CadModel regenerate_with_codes(const Cascade<float>& model, const cad::CadModel& partial,
                                    const CodeTreeSequence& codes);

// Request and response bodies shared with the service.
struct GenerationRequest {
  enum class Mode { Unconditional, Autocomplete, Edit, Regenerate };
  Mode mode = Mode::Unconditional;
  std::optional<cad::CadModel> partial;
  std::optional<CodeTreeSequence> codes;
  double p = 0.9;
  std::uint64_t seed = 0;
  int n = 1;

  static GenerationRequest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

nlohmann::json to_json(const Generated& g);
Generated run_request(const Cascade<float>& model, const GenerationRequest& req);

}  // namespace hnc::gen
