#include "hnc/cad/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include "hnc/cad/curve_math.hpp"

namespace hnc::cad {

namespace {

Loop reversed(const Loop& loop) {
  Loop out;
  out.curves.reserve(loop.curves.size());
  for (auto it = loop.curves.rbegin(); it != loop.curves.rend(); ++it) {
    Curve c = *it;
    std::reverse(c.points.begin(), c.points.end());
    out.curves.push_back(std::move(c));
  }
  return out;
}

Loop rotated(const Loop& loop, std::size_t first) {
  Loop out;
  out.curves.reserve(loop.curves.size());
  for (std::size_t i = 0; i < loop.curves.size(); ++i) {
    out.curves.push_back(loop.curves[(first + i) % loop.curves.size()]);
  }
  return out;
}

std::vector<Point> flatten(const Loop& loop) {
  std::vector<Point> pts;
  for (const auto& c : loop.curves) pts.insert(pts.end(), c.points.begin(), c.points.end());
  return pts;
}

}  // namespace

Loop canonical_loop(const Loop& loop) {
  if (loop.curves.empty()) throw ValidationError(Reason::EmptyLoop, "empty loop");
  if (loop.is_circle()) return loop;

  const double area = signed_area(loop);
  if (std::abs(area) < 1e-12) {
    throw ValidationError(Reason::DegenerateLoop, "loop encloses zero area");
  }
  const Loop ccw = area < 0 ? reversed(loop) : loop;

  // Smallest start point wins; ties go to the rotation whose flattened point
  // list is smallest, which keeps the result a fixed point.
  Point best = ccw.curves.front().start();
  for (const auto& c : ccw.curves) best = std::min(best, c.start());
  std::optional<Loop> chosen;
  std::vector<Point> chosen_key;
  for (std::size_t i = 0; i < ccw.curves.size(); ++i) {
    if (ccw.curves[i].start() != best) continue;
    Loop candidate = rotated(ccw, i);
    auto key = flatten(candidate);
    if (!chosen || key < chosen_key) {
      chosen = std::move(candidate);
      chosen_key = std::move(key);
    }
  }
  return *chosen;
}

CadModel canonical_sort(const CadModel& model) {
  CadModel out = model;
  for (auto& step : out.steps) {
    for (auto& loop : step.loops) loop = canonical_loop(loop);
    struct Keyed {
      Box2 box;
      std::vector<Point> points;
      Loop loop;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(step.loops.size());
    for (auto& loop : step.loops) {
      keyed.push_back({loop_bbox(loop), flatten(loop), std::move(loop)});
    }
    // Corner ascending; on equal corners the larger box (the enclosing loop)
    // comes first.
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
      return std::tie(a.box.x, a.box.y, b.box.w, b.box.h, a.points) <
             std::tie(b.box.x, b.box.y, a.box.w, a.box.h, b.points);
    });
    step.loops.clear();
    for (auto& k : keyed) step.loops.push_back(std::move(k.loop));
  }
  return out;
}

}  // namespace hnc::cad
