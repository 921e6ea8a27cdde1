#pragma once

#include <random>

#include "hnc/cad/model.hpp"
#include "hnc/hierarchy/properties.hpp"

namespace hnc::hierarchy {

struct AugmentOptions {
  // Probability of a nonzero shift; split evenly between -1 and +1.
  double shift_probability = 0.5;
};

int shift_bin(int bin, std::mt19937_64& rng, const AugmentOptions& options = {});

LoopProperty augment(const LoopProperty& p, std::mt19937_64& rng,
                     const AugmentOptions& options = {});
// Loop-level coordinates are shifted; profile and solid boxes are returned as is.
LevelTokens augment(const LevelTokens& t, std::mt19937_64& rng,
                    const AugmentOptions& options = {});
// Each distinct sketch point of a step is shifted once, so curves stay
// connected. Plane, distance and op are untouched. Falls back to the input
// when the shifted model is degenerate.
cad::CadModel augment(const cad::CadModel& model, std::mt19937_64& rng,
                      const AugmentOptions& options = {});

}  // namespace hnc::hierarchy
