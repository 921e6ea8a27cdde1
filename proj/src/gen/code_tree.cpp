#include "hnc/gen/code_tree.hpp"

#include <fmt/format.h>

namespace hnc::gen {

using nlohmann::json;

int CodeVocab::size_of(Level l) const {
  switch (l) {
    case Level::Loop: return loops;
    case Level::Profile: return profiles;
    case Level::Solid: return solids;
  }
  return 0;
}

int CodeVocab::base(Level l) const {
  switch (l) {
    case Level::Loop: return 0;
    case Level::Profile: return loops;
    case Level::Solid: return loops + profiles;
  }
  return 0;
}

int CodeVocab::token(Level l, int code) const {
  if (code < 0 || code >= size_of(l)) {
    throw CodeTreeError(CodeTreeError::Kind::OutOfRange,
                        fmt::format("{} code {} outside 0..{}", hierarchy::level_name(l), code, size_of(l) - 1));
  }
  return base(l) + code;
}

std::optional<Level> CodeVocab::level_of(int token) const {
  if (token < 0) return std::nullopt;
  if (token < loops) return Level::Loop;
  if (token < loops + profiles) return Level::Profile;
  if (token < sep()) return Level::Solid;
  return std::nullopt;
}

int CodeVocab::code_of(int token) const {
  const auto l = level_of(token);
  if (!l) throw CodeTreeError(CodeTreeError::Kind::OutOfRange, fmt::format("token {} is not a code", token));
  return token - base(*l);
}

json CodeVocab::to_json() const { return {{"loops", loops}, {"profiles", profiles}, {"solids", solids}}; }

CodeVocab CodeVocab::from_json(const json& j) {
  return {j.at("loops").get<int>(), j.at("profiles").get<int>(), j.at("solids").get<int>()};
}

hierarchy::CodeTreeSkeleton CodeTree::skeleton() const {
  hierarchy::CodeTreeSkeleton s;
  for (const auto& p : profiles) s.loops_per_profile.push_back(static_cast<int>(p.loops.size()));
  return s;
}

CodeTreeSequence serialize(const CodeTree& tree, const CodeVocab& vocab) {
  if (tree.profiles.empty()) throw CodeTreeError(CodeTreeError::Kind::Grammar, "code tree without profiles");
  CodeTreeSequence out{vocab.token(Level::Solid, tree.solid)};
  for (const auto& p : tree.profiles) {
    if (p.loops.empty()) throw CodeTreeError(CodeTreeError::Kind::Grammar, "profile without loops");
    out.push_back(vocab.sep());
    out.push_back(vocab.token(Level::Profile, p.code));
    for (int l : p.loops) out.push_back(vocab.token(Level::Loop, l));
  }
  out.push_back(vocab.eos());
  return out;
}

CodeTree deserialize(std::span<const int> tokens, const CodeVocab& vocab) {
  CodeGrammar g(vocab, kMaxCodeTokens, kMaxCodeTokens, kMaxCodeTokens);
  CodeTree tree;
  for (int t : tokens) {
    g.advance(t);
    const auto level = vocab.level_of(t);
    if (!level) continue;
    const int code = vocab.code_of(t);
    switch (*level) {
      case Level::Solid: tree.solid = code; break;
      case Level::Profile: tree.profiles.push_back({code, {}}); break;
      case Level::Loop: tree.profiles.back().loops.push_back(code); break;
    }
  }
  if (!g.done()) throw CodeTreeError(CodeTreeError::Kind::Grammar, "code tree ends before EOS");
  return tree;
}

CodeGrammar::CodeGrammar(CodeVocab vocab, int max_profiles, int max_loops, int max_tokens)
    : vocab_(vocab), max_profiles_(max_profiles), max_loops_(max_loops), max_tokens_(max_tokens) {}

std::optional<std::string> CodeGrammar::check(int token) const {
  const auto level = vocab_.level_of(token);
  const bool sep = token == vocab_.sep(), eos = token == vocab_.eos();
  if (!level && !sep && !eos) return fmt::format("token {} outside the code vocabulary", token);
  if (emitted_ >= max_tokens_) return fmt::format("code tree longer than {} tokens", max_tokens_);
  switch (state_) {
    case State::Solid:
      if (level == Level::Solid) return std::nullopt;
      return "expected a solid code";
    case State::Sep:
      if (sep) return std::nullopt;
      return "expected SEP";
    case State::Profile:
      if (level == Level::Profile) return std::nullopt;
      return "expected a profile code";
    case State::FirstLoop:
      if (level == Level::Loop) return std::nullopt;
      return "expected a loop code";
    case State::LoopOrNext:
      if (level == Level::Loop) {
        if (loops_ >= max_loops_) return fmt::format("more than {} loops in a profile", max_loops_);
        return std::nullopt;
      }
      if (sep) {
        if (profiles_ >= max_profiles_) return fmt::format("more than {} profiles", max_profiles_);
        return std::nullopt;
      }
      if (eos) return std::nullopt;
      return "expected a loop code, SEP or EOS";
    case State::Done:
      return "token after EOS";
  }
  return "invalid state";
}

void CodeGrammar::advance(int token) {
  if (auto err = check(token)) {
    const bool code_slot = state_ == State::Solid || state_ == State::Profile || state_ == State::FirstLoop ||
                           state_ == State::LoopOrNext;
    const auto kind = code_slot && vocab_.level_of(token) && emitted_ < max_tokens_ &&
                              !(state_ == State::LoopOrNext && vocab_.level_of(token) == Level::Loop)
                          ? CodeTreeError::Kind::LevelMismatch
                          : CodeTreeError::Kind::Grammar;
    throw CodeTreeError(kind, fmt::format("position {}: {}", emitted_, *err));
  }
  ++emitted_;
  switch (state_) {
    case State::Solid: state_ = State::Sep; break;
    case State::Sep:
      ++profiles_;
      loops_ = 0;
      state_ = State::Profile;
      break;
    case State::Profile: state_ = State::FirstLoop; break;
    case State::FirstLoop:
      loops_ = 1;
      state_ = State::LoopOrNext;
      break;
    case State::LoopOrNext:
      if (token == vocab_.sep()) {
        ++profiles_;
        loops_ = 0;
        state_ = State::Profile;
      } else if (token == vocab_.eos()) {
        state_ = State::Done;
      } else {
        ++loops_;
      }
      break;
    case State::Done: break;
  }
}

int CodeGrammar::min_remaining() const {
  switch (state_) {
    case State::Solid: return 5;
    case State::Sep: return 4;
    case State::Profile: return 3;
    case State::FirstLoop: return 2;
    case State::LoopOrNext: return 1;
    case State::Done: return 0;
  }
  return 0;
}

std::vector<bool> CodeGrammar::allowed() const {
  std::vector<bool> out(vocab_.size(), false);
  auto fits = [&](int token) {
    if (check(token)) return false;
    CodeGrammar next = *this;
    next.advance(token);
    return next.emitted_ + next.min_remaining() <= max_tokens_;
  };
  // Every code of one level behaves alike, so test one representative.
  for (Level l : {Level::Loop, Level::Profile, Level::Solid}) {
    if (vocab_.size_of(l) == 0 || !fits(vocab_.base(l))) continue;
    std::fill(out.begin() + vocab_.base(l), out.begin() + vocab_.base(l) + vocab_.size_of(l), true);
  }
  out[vocab_.sep()] = fits(vocab_.sep());
  out[vocab_.eos()] = fits(vocab_.eos());
  return out;
}

std::vector<SlotKind> CodeGrammar::expected() const {
  const auto ok = allowed();
  std::vector<SlotKind> out;
  if (vocab_.solids && ok[vocab_.base(Level::Solid)]) out.push_back(SlotKind::Solid);
  if (ok[vocab_.sep()]) out.push_back(SlotKind::Sep);
  if (vocab_.profiles && ok[vocab_.base(Level::Profile)]) out.push_back(SlotKind::Profile);
  if (vocab_.loops && ok[vocab_.base(Level::Loop)]) out.push_back(SlotKind::Loop);
  return out;
}

namespace {

const char* slot_name(SlotKind k) {
  switch (k) {
    case SlotKind::Solid: return "solid";
    case SlotKind::Sep: return "sep";
    case SlotKind::Profile: return "profile";
    case SlotKind::Loop: return "loop";
  }
  return "?";
}

}  // namespace

json SlotPath::to_json() const {
  json j{{"kind", slot_name(kind)}};
  if (kind != SlotKind::Solid) j["profile"] = profile;
  if (kind == SlotKind::Loop) j["loop"] = loop;
  return j;
}

SlotPath SlotPath::from_json(const json& j) {
  SlotPath p;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "solid") {
    p.kind = SlotKind::Solid;
  } else if (kind == "profile") {
    p.kind = SlotKind::Profile;
  } else if (kind == "loop") {
    p.kind = SlotKind::Loop;
  } else {
    throw CodeTreeError(CodeTreeError::Kind::OutOfRange, "slot kind must be solid, profile or loop");
  }
  p.profile = j.value("profile", 0);
  p.loop = j.value("loop", 0);
  return p;
}

Level level_of(SlotKind kind) {
  switch (kind) {
    case SlotKind::Solid: return Level::Solid;
    case SlotKind::Profile: return Level::Profile;
    case SlotKind::Loop: return Level::Loop;
    case SlotKind::Sep: break;
  }
  throw CodeTreeError(CodeTreeError::Kind::OutOfRange, "SEP is not a code slot");
}

CodeTreeSequence edit_code_tree(std::span<const int> tokens, const CodeVocab& vocab, const SlotPath& path,
                                int new_token) {
  const CodeTree tree = deserialize(tokens, vocab);
  const auto level = vocab.level_of(new_token);
  if (!level) throw CodeTreeError(CodeTreeError::Kind::OutOfRange, fmt::format("token {} is not a code", new_token));
  const Level want = level_of(path.kind);
  if (*level != want) {
    throw CodeTreeError(CodeTreeError::Kind::LevelMismatch,
                        fmt::format("{} slot cannot take a {} code", hierarchy::level_name(want),
                                    hierarchy::level_name(*level)));
  }
  // Index of the addressed slot in the flat sequence.
  std::size_t index = 0;
  if (path.kind != SlotKind::Solid) {
    if (path.profile < 0 || path.profile >= static_cast<int>(tree.profiles.size())) {
      throw CodeTreeError(CodeTreeError::Kind::OutOfRange, fmt::format("no profile {}", path.profile));
    }
    index = 1;
    for (int p = 0; p < path.profile; ++p) index += 2 + tree.profiles[p].loops.size();
    index += 1;  // profile code after SEP
    if (path.kind == SlotKind::Loop) {
      const auto& loops = tree.profiles[path.profile].loops;
      if (path.loop < 0 || path.loop >= static_cast<int>(loops.size())) {
        throw CodeTreeError(CodeTreeError::Kind::OutOfRange,
                            fmt::format("no loop {} in profile {}", path.loop, path.profile));
      }
      index += 1 + path.loop;
    }
  }
  CodeTreeSequence out(tokens.begin(), tokens.end());
  out[index] = new_token;
  return out;
}

}  // namespace hnc::gen
