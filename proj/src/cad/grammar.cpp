#include "hnc/cad/grammar.hpp"

#include <algorithm>
#include <limits>

#include "hnc/cad/tokens.hpp"

namespace hnc::cad {

namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 4;
// END_PROFILE, 8 scalars, op, END_STEP, EOS.
constexpr int kTailAfterLoop = 12;

}  // namespace

std::optional<Reason> Grammar::check(int t) const {
  if (phase_ == Phase::Done) return Reason::TrailingTokens;
  if (t < 0 || t >= tok::kPad) return Reason::UnexpectedToken;
  if (emitted_ + 1 > caps_.max_tokens) return Reason::TooManyTokens;

  switch (phase_) {
    case Phase::StepStart:
      if (t == tok::kEos) {
        return steps_ > 0 ? std::nullopt : std::optional(Reason::EmptyModel);
      }
      if (tok::is_xy(t)) {
        return steps_ < caps_.max_steps ? std::nullopt
                                        : std::optional(Reason::TooManySteps);
      }
      return Reason::UnexpectedToken;

    case Phase::Curve:
      if (tok::is_xy(t)) {
        if (points_ == 0) {
          return tok::point_of(t) == last_ ? std::nullopt
                                           : std::optional(Reason::DisconnectedCurve);
        }
        if (points_ == 3 && curve_index_ > 0) return Reason::CircleNotAlone;
        if (points_ >= 4) return Reason::InvalidCurveArity;
        return std::nullopt;
      }
      if (t == tok::kSepCurve) {
        if (points_ == 4) return Reason::CircleNotAlone;
        if (points_ < 2) return Reason::InvalidCurveArity;
        if (curve_index_ + 1 >= caps_.max_curves) return Reason::TooManyCurves;
        return std::nullopt;
      }
      if (t == tok::kEndLoop) {
        if (points_ < 2) return Reason::InvalidCurveArity;
        if (points_ == 4) return std::nullopt;
        return last_ == loop_start_ ? std::nullopt
                                    : std::optional(Reason::LoopNotClosed);
      }
      if (points_ == 0 || points_ == 1) return Reason::InvalidCurveArity;
      return Reason::UnexpectedToken;

    case Phase::AfterLoop:
      if (t == tok::kEndProfile) return std::nullopt;
      if (tok::is_xy(t)) {
        return loops_ < caps_.max_loops ? std::nullopt
                                        : std::optional(Reason::TooManyLoops);
      }
      return Reason::UnexpectedToken;

    case Phase::Ext:
      return tok::is_scalar(t) ? std::nullopt : std::optional(Reason::UnexpectedToken);
    case Phase::Op:
      return tok::is_bool(t) ? std::nullopt : std::optional(Reason::UnexpectedToken);
    case Phase::EndStep:
      return t == tok::kEndStep ? std::nullopt : std::optional(Reason::UnexpectedToken);
    case Phase::Done:
      break;
  }
  return Reason::UnexpectedToken;
}

void Grammar::advance(int t) {
  ++emitted_;
  switch (phase_) {
    case Phase::StepStart:
      if (t == tok::kEos) {
        phase_ = Phase::Done;
        return;
      }
      loops_ = 0;
      [[fallthrough]];
    case Phase::AfterLoop:
      if (t == tok::kEndProfile) {
        phase_ = Phase::Ext;
        ext_ = 0;
        return;
      }
      phase_ = Phase::Curve;
      loop_start_ = last_ = tok::point_of(t);
      curve_index_ = 0;
      points_ = 1;
      return;
    case Phase::Curve:
      if (tok::is_xy(t)) {
        last_ = tok::point_of(t);
        ++points_;
      } else if (t == tok::kSepCurve) {
        ++curve_index_;
        points_ = 0;
      } else {
        ++loops_;
        phase_ = Phase::AfterLoop;
      }
      return;
    case Phase::Ext:
      if (++ext_ == 8) phase_ = Phase::Op;
      return;
    case Phase::Op:
      phase_ = Phase::EndStep;
      return;
    case Phase::EndStep:
      ++steps_;
      phase_ = Phase::StepStart;
      return;
    case Phase::Done:
      return;
  }
}

int Grammar::min_remaining() const {
  switch (phase_) {
    case Phase::Done: return 0;
    // A single three-point arc back to its start is the shortest loop.
    case Phase::StepStart: return steps_ > 0 ? 1 : 4 + kTailAfterLoop;
    case Phase::AfterLoop: return kTailAfterLoop;
    case Phase::Ext: return (8 - ext_) + 3;
    case Phase::Op: return 2;
    case Phase::EndStep: return 2;
    case Phase::Curve: break;
  }
  const bool closed = last_ == loop_start_;
  int close = kInf;
  switch (points_) {
    case 0: close = 3; break;  // forced start point, point back to start, END_LOOP
    case 1: close = 2; break;
    case 2: close = closed ? 1 : 2; break;
    case 3:
      if (closed) {
        close = 1;
      } else {
        if (curve_index_ == 0) close = 2;  // complete a circle
        if (curve_index_ + 1 < caps_.max_curves) close = std::min(close, 4);
      }
      break;
    default: close = 1; break;
  }
  return close >= kInf ? kInf : close + kTailAfterLoop;
}

std::vector<bool> Grammar::allowed() const {
  std::vector<bool> mask(tok::kVocabSize, false);
  const int budget = caps_.max_tokens - emitted_ - 1;
  auto try_token = [&](int t) {
    if (check(t)) return;
    Grammar next = *this;
    next.advance(t);
    if (next.min_remaining() <= budget) mask[t] = true;
  };
  switch (phase_) {
    case Phase::Ext:
      for (int v = 0; v < kBins; ++v) try_token(tok::scalar(v));
      break;
    case Phase::Op:
      for (int i = 0; i < 3; ++i) try_token(tok::kBoolBase + i);
      break;
    case Phase::Curve:
      if (points_ == 0) {
        try_token(tok::xy(last_.x, last_.y));
        break;
      }
      for (int t = tok::kXyBase; t < tok::kScalarBase; ++t) try_token(t);
      try_token(tok::kSepCurve);
      try_token(tok::kEndLoop);
      break;
    default:
      for (int t = 0; t < tok::kPad; ++t) try_token(t);
      break;
  }
  return mask;
}

}  // namespace hnc::cad
