#include "hnc/hierarchy/properties.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "hnc/cad/plane.hpp"
#include "hnc/cad/quantize.hpp"

namespace hnc::hierarchy {

const char* level_name(Level level) {
  switch (level) {
    case Level::Loop: return "loop";
    case Level::Profile: return "profile";
    case Level::Solid: return "solid";
  }
  return "loop";
}

Level level_from_name(std::string_view name) {
  if (name == "loop") return Level::Loop;
  if (name == "profile") return Level::Profile;
  if (name == "solid") return Level::Solid;
  throw std::invalid_argument("unknown level '" + std::string(name) + "'");
}

LoopProperty extract_loop_property(const cad::Loop& loop) {
  LoopProperty out;
  for (std::size_t c = 0; c < loop.curves.size(); ++c) {
    if (c > 0) out.items.push_back({0, 0, true});
    for (const auto& p : loop.curves[c].points) out.items.push_back({p.x, p.y, false});
  }
  return out;
}

ProfileProperty extract_profile_property(const std::vector<cad::Loop>& loops, int max_loops) {
  if (static_cast<int>(loops.size()) > max_loops) {
    throw cad::ValidationError(cad::Reason::TooManyLoops,
                               fmt::format("{} loops > {}", loops.size(), max_loops));
  }
  ProfileProperty out;
  for (const auto& loop : loops) out.boxes.push_back(cad::loop_bbox(loop));
  std::sort(out.boxes.begin(), out.boxes.end());
  return out;
}

SolidProperty extract_solid_property(const cad::CadModel& model, int max_steps) {
  if (static_cast<int>(model.steps.size()) > max_steps) {
    throw cad::ValidationError(cad::Reason::TooManySteps,
                               fmt::format("{} steps > {}", model.steps.size(), max_steps));
  }
  SolidProperty out;
  for (const auto& step : model.steps) {
    const auto frame = cad::plane_frame(step.plane);
    const double depth = cad::distance_value(step.distance);
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (const auto& loop : step.loops) {
      for (const auto& v : cad::loop_vertices(loop, 32)) {
        for (double w : {0.0, depth}) {
          const auto p = frame.to_world(v.x, v.y, w);
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
        }
      }
    }
    const int x = cad::quantize_clamped(lo.x()), y = cad::quantize_clamped(lo.y()),
              z = cad::quantize_clamped(lo.z());
    out.boxes.push_back({x, y, z, cad::quantize_clamped(hi.x()) - x,
                         cad::quantize_clamped(hi.y()) - y, cad::quantize_clamped(hi.z()) - z});
  }
  std::sort(out.boxes.begin(), out.boxes.end());
  return out;
}

LevelTokens to_tokens(const LoopProperty& p) {
  LevelTokens t{Level::Loop, {}};
  for (const auto& item : p.items) {
    if (item.sep) {
      t.values.insert(t.values.end(), {kSepClass, kSepClass});
    } else {
      t.values.insert(t.values.end(), {item.x, item.y});
    }
  }
  return t;
}

LevelTokens to_tokens(const ProfileProperty& p) {
  LevelTokens t{Level::Profile, {}};
  for (const auto& b : p.boxes) t.values.insert(t.values.end(), {b.x, b.y, b.w, b.h});
  return t;
}

LevelTokens to_tokens(const SolidProperty& p) {
  LevelTokens t{Level::Solid, {}};
  for (const auto& b : p.boxes) t.values.insert(t.values.end(), {b.x, b.y, b.z, b.w, b.h, b.d});
  return t;
}

}  // namespace hnc::hierarchy
