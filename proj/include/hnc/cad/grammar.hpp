#pragma once

#include <optional>
#include <vector>

#include "hnc/cad/model.hpp"

namespace hnc::cad {

// Incremental validator for the flat token grammar. Used by the parser and by
// constrained decoding, which additionally keeps every prefix completable
// within the token budget.
class Grammar {
 public:
  explicit Grammar(Caps caps = {}) : caps_(caps) {}

  // nullopt when `token` may follow the current prefix.
  std::optional<Reason> check(int token) const;
  // Requires check(token) == nullopt.
  void advance(int token);

  bool done() const { return phase_ == Phase::Done; }
  int emitted() const { return emitted_; }
  // Fewest tokens that reach EOS from here.
  int min_remaining() const;
  // Tokens that pass check() and leave a completion within max_tokens.
  std::vector<bool> allowed() const;

 private:
  enum class Phase { StepStart, Curve, AfterLoop, Ext, Op, EndStep, Done };

  Caps caps_;
  Phase phase_ = Phase::StepStart;
  int emitted_ = 0;
  int steps_ = 0;
  int loops_ = 0;       // completed loops in the current profile
  int curve_index_ = 0;  // index of the current curve within its loop
  int points_ = 0;      // points in the current curve
  int ext_ = 0;         // extrusion scalars emitted
  Point loop_start_;
  Point last_;
};

}  // namespace hnc::cad
