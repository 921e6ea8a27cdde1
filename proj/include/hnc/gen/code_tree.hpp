#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnc/hierarchy/properties.hpp"
#include "hnc/hierarchy/skeleton.hpp"

namespace hnc::gen {

using hierarchy::Level;
using hierarchy::SlotKind;

inline constexpr int kMaxCodeTokens = 64;  // EOS included

// Code-tree vocabulary: loop codes, then profile codes, then solid codes,
// then SEP and EOS.
struct CodeVocab {
  int loops = 2500;
  int profiles = 3500;
  int solids = 3500;

  int size_of(Level l) const;
  int base(Level l) const;
  int sep() const { return loops + profiles + solids; }
  int eos() const { return sep() + 1; }
  int size() const { return eos() + 1; }

  int token(Level l, int code) const;
  // Level of a code token; nullopt for SEP, EOS and out-of-range ids.
  std::optional<Level> level_of(int token) const;
  int code_of(int token) const;  // index within its codebook

  nlohmann::json to_json() const;
  static CodeVocab from_json(const nlohmann::json& j);
  friend bool operator==(const CodeVocab&, const CodeVocab&) = default;
};

using CodeTreeSequence = std::vector<int>;

struct ProfileCodes {
  int code = 0;
  std::vector<int> loops;
  friend bool operator==(const ProfileCodes&, const ProfileCodes&) = default;
};

// Per-level code indices arranged like the model tree.
struct CodeTree {
  int solid = 0;
  std::vector<ProfileCodes> profiles;

  hierarchy::CodeTreeSkeleton skeleton() const;
  friend bool operator==(const CodeTree&, const CodeTree&) = default;
};

class CodeTreeError : public std::runtime_error {
 public:
  enum class Kind { Grammar, LevelMismatch, OutOfRange };
  CodeTreeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// [S] then per profile [SEP, P, L...], then EOS.
CodeTreeSequence serialize(const CodeTree& tree, const CodeVocab& vocab);
CodeTree deserialize(std::span<const int> tokens, const CodeVocab& vocab);

// Incremental validator for S (SEP P L+)+ EOS within kMaxCodeTokens, with
// at most `max_profiles` profiles and `max_loops` loops per profile.
class CodeGrammar {
 public:
  explicit CodeGrammar(CodeVocab vocab, int max_profiles = 5, int max_loops = 20,
                       int max_tokens = kMaxCodeTokens);

  std::optional<std::string> check(int token) const;
  void advance(int token);  // throws CodeTreeError on an illegal token
  bool done() const { return state_ == State::Done; }
  int emitted() const { return emitted_; }
  int min_remaining() const;
  // Legal tokens that still leave room to finish.
  std::vector<bool> allowed() const;
  // Slot kind expected next when the next token is a code or SEP.
  std::vector<SlotKind> expected() const;

 private:
  enum class State { Solid, Sep, Profile, FirstLoop, LoopOrNext, Done };
  CodeVocab vocab_;
  int max_profiles_, max_loops_, max_tokens_;
  State state_ = State::Solid;
  int emitted_ = 0;
  int profiles_ = 0;
  int loops_ = 0;
};

// Addresses one slot: the solid, profile `profile`, or loop `loop` of
// profile `profile`.
struct SlotPath {
  SlotKind kind = SlotKind::Solid;
  int profile = 0;
  int loop = 0;

  nlohmann::json to_json() const;
  static SlotPath from_json(const nlohmann::json& j);
};

Level level_of(SlotKind kind);

// Replaces the code at `path` with code token `new_token`; every other token
// is unchanged. Throws CodeTreeError (LevelMismatch, OutOfRange, Grammar).
CodeTreeSequence edit_code_tree(std::span<const int> tokens, const CodeVocab& vocab, const SlotPath& path,
                                int new_token);

}  // namespace hnc::gen
