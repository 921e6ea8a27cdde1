#include "hnc/hierarchy/skeleton.hpp"

namespace hnc::hierarchy {

std::vector<SlotKind> CodeTreeSkeleton::slots() const {
  std::vector<SlotKind> out{SlotKind::Solid};
  for (int loops : loops_per_profile) {
    out.push_back(SlotKind::Sep);
    out.push_back(SlotKind::Profile);
    out.insert(out.end(), loops, SlotKind::Loop);
  }
  return out;
}

CodeTreeSkeleton skeleton_of(const cad::CadModel& model) {
  CodeTreeSkeleton s;
  for (const auto& step : model.steps) {
    s.loops_per_profile.push_back(static_cast<int>(step.loops.size()));
  }
  return s;
}

}  // namespace hnc::hierarchy
