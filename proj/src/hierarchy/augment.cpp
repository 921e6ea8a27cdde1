#include "hnc/hierarchy/augment.hpp"

#include <algorithm>
#include <map>

#include "hnc/cad/canonical.hpp"

namespace hnc::hierarchy {

int shift_bin(int bin, std::mt19937_64& rng, const AugmentOptions& options) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  int delta = 0;
  if (r < options.shift_probability / 2) {
    delta = -1;
  } else if (r < options.shift_probability) {
    delta = 1;
  }
  return std::clamp(bin + delta, 0, cad::kMaxBin);
}

LoopProperty augment(const LoopProperty& p, std::mt19937_64& rng, const AugmentOptions& options) {
  LoopProperty out = p;
  for (auto& item : out.items) {
    if (item.sep) continue;
    item.x = shift_bin(item.x, rng, options);
    item.y = shift_bin(item.y, rng, options);
  }
  return out;
}

LevelTokens augment(const LevelTokens& t, std::mt19937_64& rng, const AugmentOptions& options) {
  if (t.level != Level::Loop) return t;
  LevelTokens out = t;
  for (int& v : out.values) {
    if (v != kSepClass) v = shift_bin(v, rng, options);
  }
  return out;
}

cad::CadModel augment(const cad::CadModel& model, std::mt19937_64& rng,
                      const AugmentOptions& options) {
  cad::CadModel out = model;
  for (auto& step : out.steps) {
    std::map<cad::Point, cad::Point> moved;
    for (auto& loop : step.loops) {
      for (auto& curve : loop.curves) {
        for (auto& p : curve.points) {
          auto it = moved.find(p);
          if (it == moved.end()) {
            const cad::Point q{shift_bin(p.x, rng, options), shift_bin(p.y, rng, options)};
            it = moved.emplace(p, q).first;
          }
          p = it->second;
        }
      }
    }
  }
  try {
    cad::validate(out);
    return cad::canonical_sort(out);
  } catch (const cad::ValidationError&) {
    return model;
  }
}

}  // namespace hnc::hierarchy
