#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hnc/cad/model.hpp"

namespace hnc::cad {

// Flat token vocabulary of the construction sequence.
namespace tok {
inline constexpr int kXyBase = 0;         // 64 * x + y
inline constexpr int kScalarBase = 4096;  // value bins 0..63
inline constexpr int kSepCurve = 4160;
inline constexpr int kEndLoop = 4161;
inline constexpr int kEndProfile = 4162;
inline constexpr int kEndStep = 4163;
inline constexpr int kBoolBase = 4164;  // union, cut, intersect
inline constexpr int kEos = 4167;
inline constexpr int kPad = 4168;
inline constexpr int kVocabSize = 4169;

constexpr int xy(int x, int y) { return kXyBase + kBins * x + y; }
constexpr int scalar(int v) { return kScalarBase + v; }
constexpr int bool_op(BoolOp op) { return kBoolBase + static_cast<int>(op); }
constexpr bool is_xy(int t) { return t >= kXyBase && t < kScalarBase; }
constexpr bool is_scalar(int t) { return t >= kScalarBase && t < kSepCurve; }
constexpr bool is_bool(int t) { return t >= kBoolBase && t < kEos; }
constexpr Point point_of(int t) { return {(t - kXyBase) / kBins, (t - kXyBase) % kBins}; }
}  // namespace tok

using TokenSequence = std::vector<int>;

// Model := Step+ EOS
// Step  := Loop+ END_PROFILE Ext END_STEP
// Loop  := Curve (SEP_CURVE Curve)* END_LOOP
// Curve := XY{2|3|4}
// Ext   := scalar x 8 (ox oy oz theta phi gamma scale distance) boolop
// Throws ValidationError on structural or cap violations.
TokenSequence tokenize(const CadModel& model, const Caps& caps = {});

// Validating parser; throws ParseError carrying the offending token index.
CadModel detokenize(std::span<const int> tokens, const Caps& caps = {});

// Geometry part (XY, SEP_CURVE, END_LOOP, END_PROFILE) and extrusion part
// (8 scalars and the boolean op per step) of a token sequence.
struct SplitTokens {
  TokenSequence geometry;
  TokenSequence extrusion;
};
SplitTokens split_tokens(std::span<const int> tokens);

// 64-bit digest of the token id list (FNV-1a with a splitmix finalizer).
std::uint64_t hash_tokens(std::span<const int> tokens);

}  // namespace hnc::cad
