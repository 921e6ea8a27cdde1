#include "hnc/cad/synthetic.hpp"

#include <algorithm>

#include "hnc/cad/canonical.hpp"

namespace hnc::cad {

Loop make_rectangle(int x0, int y0, int x1, int y1) {
  Loop loop;
  const Point a{x0, y0}, b{x1, y0}, c{x1, y1}, d{x0, y1};
  loop.curves = {{{a, b}}, {{b, c}}, {{c, d}}, {{d, a}}};
  return loop;
}

Loop make_circle(int cx, int cy, int r) {
  Loop loop;
  loop.curves = {{{{cx + r, cy}, {cx, cy + r}, {cx - r, cy}, {cx, cy - r}}}};
  return loop;
}

Loop make_triangle(Point a, Point b, Point c) {
  Loop loop;
  loop.curves = {{{a, b}}, {{b, c}}, {{c, a}}};
  return loop;
}

Loop make_arch(int x0, int y0, int x1, int y1, int bulge) {
  Loop loop;
  const Point a{x0, y0}, b{x1, y0}, c{x1, y1}, d{x0, y1};
  const Point mid{(x0 + x1) / 2, y1 + bulge};
  loop.curves = {{{a, b}}, {{b, c}}, {{c, mid, d}}, {{d, a}}};
  return loop;
}

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Outer loop plus the interior rectangle where inner loops may be placed.
struct Outer {
  Loop loop;
  int ix0, iy0, ix1, iy1;
};

Outer random_outer(std::mt19937_64& rng) {
  const int kind = uniform(rng, 0, 3);
  if (kind == 1) {
    const int r = uniform(rng, 8, 28);
    const int cx = uniform(rng, r, kMaxBin - r);
    const int cy = uniform(rng, r, kMaxBin - r);
    const int h = r * 6 / 10;
    return {make_circle(cx, cy, r), cx - h, cy - h, cx + h, cy + h};
  }
  const int x0 = uniform(rng, 0, 30), y0 = uniform(rng, 0, 30);
  const int x1 = uniform(rng, x0 + 12, kMaxBin), y1 = uniform(rng, y0 + 12, kMaxBin - 6);
  if (kind == 2 && y1 + 4 <= kMaxBin) {
    const int bulge = uniform(rng, 2, std::min(10, kMaxBin - y1));
    return {make_arch(x0, y0, x1, y1, bulge), x0, y0, x1, y1};
  }
  if (kind == 3) {
    // Right triangle; interior box kept well inside the hypotenuse.
    const int w = x1 - x0, h = y1 - y0;
    return {make_triangle({x0, y0}, {x1, y0}, {x0, y1}), x0, y0, x0 + w / 2,
            y0 + h / 2};
  }
  return {make_rectangle(x0, y0, x1, y1), x0, y0, x1, y1};
}

std::vector<Loop> random_profile(std::mt19937_64& rng, int max_inner) {
  auto outer = random_outer(rng);
  std::vector<Loop> loops{outer.loop};
  // Inner loops are placed in disjoint vertical strips of the interior box.
  const int inner = uniform(rng, 0, max_inner);
  const int margin = 2;
  const int span = outer.ix1 - outer.ix0 - 2 * margin;
  const int height = outer.iy1 - outer.iy0 - 2 * margin;
  if (inner == 0 || span < 6 || height < 6) return loops;
  const int strip = span / inner;
  for (int i = 0; i < inner && strip >= 6; ++i) {
    const int sx0 = outer.ix0 + margin + i * strip;
    const int sx1 = sx0 + strip - 2;
    if (uniform(rng, 0, 1) == 0) {
      const int r = std::max(1, std::min((sx1 - sx0) / 2, height / 2) - 1);
      const int cx = (sx0 + sx1) / 2;
      const int cy = uniform(rng, outer.iy0 + margin + r, outer.iy1 - margin - r);
      loops.push_back(make_circle(cx, cy, r));
    } else {
      const int y0 = uniform(rng, outer.iy0 + margin, outer.iy1 - margin - 3);
      const int y1 = uniform(rng, y0 + 2, outer.iy1 - margin);
      loops.push_back(make_rectangle(sx0, y0, sx1, y1));
    }
  }
  return loops;
}

}  // namespace

CadModel random_model(std::mt19937_64& rng, const SyntheticOptions& options) {
  CadModel model;
  const int steps = uniform(rng, options.min_steps, options.max_steps);
  for (int s = 0; s < steps; ++s) {
    ExtrudeStep step;
    step.loops = random_profile(rng, options.max_inner_loops);
    step.plane.origin = {uniform(rng, 0, 24), uniform(rng, 0, 24), uniform(rng, 0, 24)};
    if (!options.axis_aligned) {
      step.plane.angles = {16 * uniform(rng, 0, 3), 16 * uniform(rng, 0, 1), 0};
    }
    step.plane.scale = uniform(rng, 24, kMaxBin);
    step.distance = uniform(rng, 4, 40);
    const bool cut = s > 0 && std::uniform_real_distribution<double>(0, 1)(rng) <
                                  options.cut_probability;
    step.op = cut ? BoolOp::Cut : BoolOp::Union;
    model.steps.push_back(std::move(step));
  }
  return canonical_sort(model);
}

}  // namespace hnc::cad
