#pragma once

#include <vector>

#include "hnc/cad/model.hpp"

namespace hnc::hierarchy {

enum class SlotKind { Solid, Sep, Profile, Loop };

// One solid slot per model, and per extruded profile a profile slot followed
// by one slot per loop.
struct CodeTreeSkeleton {
  std::vector<int> loops_per_profile;

  int profiles() const { return static_cast<int>(loops_per_profile.size()); }
  // Depth-first slot pattern: S, then (SEP, P, L...) per profile.
  std::vector<SlotKind> slots() const;
  friend bool operator==(const CodeTreeSkeleton&, const CodeTreeSkeleton&) = default;
};

CodeTreeSkeleton skeleton_of(const cad::CadModel& model);

}  // namespace hnc::hierarchy
