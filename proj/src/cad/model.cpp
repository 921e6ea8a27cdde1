#include "hnc/cad/model.hpp"

#include <fmt/format.h>

namespace hnc::cad {

CurveKind Curve::kind() const {
  switch (points.size()) {
    case 2: return CurveKind::Line;
    case 3: return CurveKind::Arc;
    case 4: return CurveKind::Circle;
    default:
      throw ValidationError(
          Reason::InvalidCurveArity,
          fmt::format("invalid curve arity: {} points", points.size()));
  }
}

std::string_view to_string(BoolOp op) {
  switch (op) {
    case BoolOp::Union: return "union";
    case BoolOp::Cut: return "cut";
    case BoolOp::Intersect: return "intersect";
  }
  return "union";
}

BoolOp bool_op_from_string(std::string_view name) {
  if (name == "union") return BoolOp::Union;
  if (name == "cut") return BoolOp::Cut;
  if (name == "intersect") return BoolOp::Intersect;
  throw ValidationError(Reason::OutOfRange,
                        fmt::format("unknown boolean op '{}'", name));
}

std::string_view reason_code(Reason reason) {
  switch (reason) {
    case Reason::OutOfRange: return "out_of_range";
    case Reason::InvalidCurveArity: return "invalid_curve_arity";
    case Reason::DisconnectedCurve: return "disconnected_curve";
    case Reason::LoopNotClosed: return "loop_not_closed";
    case Reason::CircleNotAlone: return "circle_not_alone";
    case Reason::EmptyLoop: return "empty_loop";
    case Reason::EmptyProfile: return "empty_profile";
    case Reason::EmptyModel: return "empty_model";
    case Reason::DegenerateLoop: return "degenerate_loop";
    case Reason::TooManySteps: return "too_many_steps";
    case Reason::TooManyLoops: return "too_many_loops";
    case Reason::TooManyCurves: return "too_many_curves";
    case Reason::TooManyTokens: return "too_many_tokens";
    case Reason::UnexpectedToken: return "unexpected_token";
    case Reason::UnexpectedEnd: return "unexpected_end";
    case Reason::TrailingTokens: return "trailing_tokens";
  }
  return "unknown";
}

ParseError::ParseError(Reason reason, std::size_t index, const std::string& what)
    : ValidationError(reason, fmt::format("token {}: {}", index, what)),
      index_(index) {}

namespace {

bool in_range(int bin) { return bin >= 0 && bin <= kMaxBin; }

void check_loop(const Loop& loop, std::size_t s, std::size_t l,
                std::vector<Violation>& out) {
  auto where = [&] { return fmt::format("step {} loop {}", s, l); };
  if (loop.curves.empty()) {
    out.push_back({Reason::EmptyLoop, where()});
    return;
  }
  for (std::size_t c = 0; c < loop.curves.size(); ++c) {
    const auto& pts = loop.curves[c].points;
    if (pts.size() < 2 || pts.size() > 4) {
      out.push_back({Reason::InvalidCurveArity,
                     fmt::format("{} curve {}: {} points", where(), c,
                                 pts.size())});
      return;
    }
    for (const auto& p : pts) {
      if (!in_range(p.x) || !in_range(p.y)) {
        out.push_back({Reason::OutOfRange, fmt::format("{} curve {}", where(), c)});
        return;
      }
    }
    if (pts.size() == 4 && loop.curves.size() != 1) {
      out.push_back({Reason::CircleNotAlone, where()});
      return;
    }
  }
  if (loop.is_circle()) return;
  const auto n = loop.curves.size();
  for (std::size_t c = 0; c + 1 < n; ++c) {
    if (loop.curves[c].end() != loop.curves[c + 1].start()) {
      out.push_back({Reason::DisconnectedCurve,
                     fmt::format("{} curves {}->{}", where(), c, c + 1)});
      return;
    }
  }
  if (loop.curves.back().end() != loop.curves.front().start()) {
    out.push_back({Reason::LoopNotClosed, where()});
  }
}

}  // namespace

std::vector<Violation> structural_violations(const CadModel& model) {
  std::vector<Violation> out;
  if (model.steps.empty()) {
    out.push_back({Reason::EmptyModel, "model has no steps"});
    return out;
  }
  for (std::size_t s = 0; s < model.steps.size(); ++s) {
    const auto& step = model.steps[s];
    if (step.loops.empty()) {
      out.push_back({Reason::EmptyProfile, fmt::format("step {}", s)});
      continue;
    }
    for (std::size_t l = 0; l < step.loops.size(); ++l) {
      check_loop(step.loops[l], s, l, out);
    }
    const auto& pl = step.plane;
    bool ok = in_range(step.distance) && in_range(pl.scale);
    for (int v : pl.origin) ok = ok && in_range(v);
    for (int v : pl.angles) ok = ok && in_range(v);
    if (!ok) {
      out.push_back({Reason::OutOfRange,
                     fmt::format("step {} extrusion parameters", s)});
    }
  }
  return out;
}

int token_count(const CadModel& model) {
  int n = 1;  // EOS
  for (const auto& step : model.steps) {
    for (const auto& loop : step.loops) {
      for (const auto& curve : loop.curves) {
        n += static_cast<int>(curve.points.size());
      }
      n += static_cast<int>(loop.curves.size()) - 1;  // separators
      n += 1;                                         // END_LOOP
    }
    n += 1 + 9 + 1;  // END_PROFILE, extrusion scalars + op, END_STEP
  }
  return n;
}

std::vector<Violation> cap_violations(const CadModel& model, const Caps& caps) {
  std::vector<Violation> out;
  const int steps = static_cast<int>(model.steps.size());
  if (steps > caps.max_steps) {
    out.push_back({Reason::TooManySteps,
                   fmt::format("{} steps > {}", steps, caps.max_steps)});
  }
  for (std::size_t s = 0; s < model.steps.size(); ++s) {
    const auto& loops = model.steps[s].loops;
    if (static_cast<int>(loops.size()) > caps.max_loops) {
      out.push_back({Reason::TooManyLoops,
                     fmt::format("step {}: {} loops > {}", s, loops.size(),
                                 caps.max_loops)});
    }
    for (std::size_t l = 0; l < loops.size(); ++l) {
      if (static_cast<int>(loops[l].curves.size()) > caps.max_curves) {
        out.push_back({Reason::TooManyCurves,
                       fmt::format("step {} loop {}: {} curves > {}", s, l,
                                   loops[l].curves.size(), caps.max_curves)});
      }
    }
  }
  const int tokens = token_count(model);
  if (tokens > caps.max_tokens) {
    out.push_back({Reason::TooManyTokens,
                   fmt::format("{} tokens > {}", tokens, caps.max_tokens)});
  }
  return out;
}

void validate(const CadModel& model) {
  auto v = structural_violations(model);
  if (!v.empty()) throw ValidationError(v.front().reason, v.front().detail);
}

}  // namespace hnc::cad
