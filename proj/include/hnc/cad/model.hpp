#pragma once

#include <array>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hnc::cad {

// Every numeric field of a model is a 6-bit bin index.
inline constexpr int kBins = 64;
inline constexpr int kMaxBin = kBins - 1;

struct Point {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

// Curve kind is implied by the number of points: 2 line, 3 arc, 4 circle.
enum class CurveKind { Line, Arc, Circle };

struct Curve {
  std::vector<Point> points;

  CurveKind kind() const;
  const Point& start() const { return points.front(); }
  const Point& end() const { return points.back(); }
  friend bool operator==(const Curve&, const Curve&) = default;
};

struct Loop {
  std::vector<Curve> curves;

  bool is_circle() const {
    return curves.size() == 1 && curves.front().points.size() == 4;
  }
  friend bool operator==(const Loop&, const Loop&) = default;
};

// origin bins are the lower bin edge (q/64), angle bins cover [0, 2pi) with
// q * 2pi / 64, scale maps to (q + 1) / 64.
struct SketchPlane {
  std::array<int, 3> origin{0, 0, 0};
  std::array<int, 3> angles{0, 0, 0};
  int scale = kMaxBin;
  friend bool operator==(const SketchPlane&, const SketchPlane&) = default;
};

enum class BoolOp { Union, Cut, Intersect };

struct ExtrudeStep {
  std::vector<Loop> loops;  // first loop is the outer boundary
  SketchPlane plane;
  int distance = 0;
  BoolOp op = BoolOp::Union;
  friend bool operator==(const ExtrudeStep&, const ExtrudeStep&) = default;
};

struct CadModel {
  std::vector<ExtrudeStep> steps;
  friend bool operator==(const CadModel&, const CadModel&) = default;
};

std::string_view to_string(BoolOp op);
BoolOp bool_op_from_string(std::string_view name);

// Dataset filter limits.
struct Caps {
  int max_steps = 5;
  int max_loops = 20;
  int max_curves = 60;
  int max_tokens = 200;
};

// Machine-readable reason attached to every validation and parse failure.
enum class Reason {
  OutOfRange,
  InvalidCurveArity,
  DisconnectedCurve,
  LoopNotClosed,
  CircleNotAlone,
  EmptyLoop,
  EmptyProfile,
  EmptyModel,
  DegenerateLoop,
  TooManySteps,
  TooManyLoops,
  TooManyCurves,
  TooManyTokens,
  UnexpectedToken,
  UnexpectedEnd,
  TrailingTokens,
};

std::string_view reason_code(Reason reason);

class ValidationError : public std::runtime_error {
 public:
  ValidationError(Reason reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

class ParseError : public ValidationError {
 public:
  ParseError(Reason reason, std::size_t index, const std::string& what);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct Violation {
  Reason reason;
  std::string detail;
};

// Structural checks: bins in range, arity, connectivity, closure.
std::vector<Violation> structural_violations(const CadModel& model);

// Size limits, including the token count of the flat encoding.
std::vector<Violation> cap_violations(const CadModel& model,
                                      const Caps& caps = {});

// Throws ValidationError with the first structural violation.
void validate(const CadModel& model);

// Number of tokens tokenize() emits for `model`, EOS included.
int token_count(const CadModel& model);

}  // namespace hnc::cad
