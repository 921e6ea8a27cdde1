#pragma once

#include "hnc/cad/model.hpp"

namespace hnc::cad {

// Orients a loop counterclockwise and rotates it to start at the curve with
// the lexicographically smallest (x, y) start point. Circles are returned
// unchanged. Throws ValidationError(DegenerateLoop) for zero-area loops.
Loop canonical_loop(const Loop& loop);

// Canonical loops, and loops within each profile ordered by the (x, y)
// corner of their bounding box. Step order is preserved. Idempotent.
CadModel canonical_sort(const CadModel& model);

}  // namespace hnc::cad
