#pragma once

#include <compare>
#include <vector>

#include "hnc/cad/curve_math.hpp"
#include "hnc/cad/model.hpp"

namespace hnc::hierarchy {

enum class Level { Loop = 0, Profile = 1, Solid = 2 };

const char* level_name(Level level);
Level level_from_name(std::string_view name);

// Scalars per sequence position: (x, y) for loops, (x, y, w, h) for profiles,
// (x, y, z, w, h, d) for solids.
constexpr int tuple_width(Level level) {
  return level == Level::Loop ? 2 : level == Level::Profile ? 4 : 6;
}

// 64 coordinate bins plus the separator class.
inline constexpr int kClasses = 65;
inline constexpr int kSepClass = 64;

struct LoopItem {
  int x = 0;
  int y = 0;
  bool sep = false;
  friend auto operator<=>(const LoopItem&, const LoopItem&) = default;
};

struct LoopProperty {
  std::vector<LoopItem> items;
  friend auto operator<=>(const LoopProperty&, const LoopProperty&) = default;
};

struct ProfileProperty {
  std::vector<cad::Box2> boxes;
  friend auto operator<=>(const ProfileProperty&, const ProfileProperty&) = default;
};

struct Box3 {
  int x = 0, y = 0, z = 0, w = 0, h = 0, d = 0;
  friend auto operator<=>(const Box3&, const Box3&) = default;
};

struct SolidProperty {
  std::vector<Box3> boxes;
  friend auto operator<=>(const SolidProperty&, const SolidProperty&) = default;
};

// Level-agnostic form consumed by the codebook models: `values` holds
// tuple_width(level) classes per position, row-major; SEP is (64, 64).
struct LevelTokens {
  Level level = Level::Loop;
  std::vector<int> values;

  int width() const { return tuple_width(level); }
  int length() const { return static_cast<int>(values.size()) / width(); }
  friend bool operator==(const LevelTokens&, const LevelTokens&) = default;
};

// Longest sequence per level: 60 curves of up to 4 points with 59 separators
// is bounded by 299 loop positions; 20 profile boxes; 5 solid boxes.
constexpr int max_length(Level level) {
  return level == Level::Loop ? 299 : level == Level::Profile ? 20 : 5;
}

LoopProperty extract_loop_property(const cad::Loop& loop);
// Throws cad::ValidationError(TooManyLoops) beyond `max_loops`.
ProfileProperty extract_profile_property(const std::vector<cad::Loop>& loops,
                                         int max_loops = 20);
// Throws cad::ValidationError(TooManySteps) beyond `max_steps`.
SolidProperty extract_solid_property(const cad::CadModel& model, int max_steps = 5);

LevelTokens to_tokens(const LoopProperty& p);
LevelTokens to_tokens(const ProfileProperty& p);
LevelTokens to_tokens(const SolidProperty& p);

}  // namespace hnc::hierarchy
