#include "hnc/cad/tokens.hpp"

#include <fmt/format.h>

#include "hnc/cad/grammar.hpp"

namespace hnc::cad {

TokenSequence tokenize(const CadModel& model, const Caps& caps) {
  validate(model);
  if (auto caps_broken = cap_violations(model, caps); !caps_broken.empty()) {
    throw ValidationError(caps_broken.front().reason, caps_broken.front().detail);
  }
  TokenSequence out;
  out.reserve(token_count(model));
  for (const auto& step : model.steps) {
    for (const auto& loop : step.loops) {
      for (std::size_t c = 0; c < loop.curves.size(); ++c) {
        if (c > 0) out.push_back(tok::kSepCurve);
        for (const auto& p : loop.curves[c].points) out.push_back(tok::xy(p.x, p.y));
      }
      out.push_back(tok::kEndLoop);
    }
    out.push_back(tok::kEndProfile);
    const auto& pl = step.plane;
    for (int v : pl.origin) out.push_back(tok::scalar(v));
    for (int v : pl.angles) out.push_back(tok::scalar(v));
    out.push_back(tok::scalar(pl.scale));
    out.push_back(tok::scalar(step.distance));
    out.push_back(tok::bool_op(step.op));
    out.push_back(tok::kEndStep);
  }
  out.push_back(tok::kEos);
  return out;
}

CadModel detokenize(std::span<const int> tokens, const Caps& caps) {
  Grammar grammar(caps);
  CadModel model;
  ExtrudeStep step;
  Loop loop;
  Curve curve;
  int ext = 0;
  std::array<int, 8> scalars{};

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int t = tokens[i];
    if (auto err = grammar.check(t)) {
      throw ParseError(*err, i, fmt::format("{} at token id {}", reason_code(*err), t));
    }
    grammar.advance(t);

    if (tok::is_xy(t)) {
      curve.points.push_back(tok::point_of(t));
    } else if (t == tok::kSepCurve) {
      loop.curves.push_back(std::move(curve));
      curve = {};
    } else if (t == tok::kEndLoop) {
      loop.curves.push_back(std::move(curve));
      curve = {};
      step.loops.push_back(std::move(loop));
      loop = {};
    } else if (t == tok::kEndProfile) {
      ext = 0;
    } else if (tok::is_scalar(t)) {
      scalars[ext++] = t - tok::kScalarBase;
    } else if (tok::is_bool(t)) {
      step.plane.origin = {scalars[0], scalars[1], scalars[2]};
      step.plane.angles = {scalars[3], scalars[4], scalars[5]};
      step.plane.scale = scalars[6];
      step.distance = scalars[7];
      step.op = static_cast<BoolOp>(t - tok::kBoolBase);
    } else if (t == tok::kEndStep) {
      model.steps.push_back(std::move(step));
      step = {};
    }
  }
  if (!grammar.done()) {
    throw ParseError(Reason::UnexpectedEnd, tokens.size(), "unexpected end of sequence");
  }
  return model;
}

SplitTokens split_tokens(std::span<const int> tokens) {
  SplitTokens out;
  for (int t : tokens) {
    if (tok::is_xy(t) || t == tok::kSepCurve || t == tok::kEndLoop ||
        t == tok::kEndProfile) {
      out.geometry.push_back(t);
    } else if (tok::is_scalar(t) || tok::is_bool(t)) {
      out.extrusion.push_back(t);
    }
  }
  return out;
}

std::uint64_t hash_tokens(std::span<const int> tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int t : tokens) {
    auto v = static_cast<std::uint32_t>(t);
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  h ^= static_cast<std::uint64_t>(tokens.size());
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace hnc::cad
