#include <fstream>
#include <random>

#include "doctest.h"
#include "hnc/cad/canonical.hpp"
#include "hnc/cad/curve_math.hpp"
#include "hnc/cad/grammar.hpp"
#include "hnc/cad/json_io.hpp"
#include "hnc/cad/quantize.hpp"
#include "hnc/cad/synthetic.hpp"
#include "hnc/cad/tokens.hpp"

using namespace hnc::cad;

namespace {

CadModel square_model() {
  ExtrudeStep step;
  step.loops = {make_rectangle(0, 0, 63, 63)};
  step.distance = 63;
  return CadModel{{step}};
}

Reason parse_reason(const TokenSequence& t) {
  try {
    detokenize(t);
  } catch (const ParseError& e) {
    return e.reason();
  }
  FAIL("expected a parse error");
  return Reason::OutOfRange;
}

}  // namespace

TEST_CASE("quantize_coord bins") {
  CHECK(quantize_coord(0.0) == 0);
  CHECK(quantize_coord(1.0) == 63);
  CHECK(quantize_coord(0.5) == 32);
  CHECK_THROWS_AS(quantize_coord(-0.01), std::out_of_range);
  CHECK_THROWS_AS(quantize_coord(1.5), std::out_of_range);
}

TEST_CASE("dequantize_coord is the bin center") {
  CHECK(dequantize_coord(0) == 0.0078125);
  CHECK(dequantize_coord(63) == 0.9921875);
  for (int i = 0; i <= 10000; ++i) {
    const double v = i / 10000.0;
    CHECK(std::abs(dequantize_coord(quantize_coord(v)) - v) <= 1.0 / 128 + 1e-15);
  }
}

TEST_CASE("canonical_sort orients and rotates loops") {
  // Unit square entered clockwise starting at (1,1).
  Loop cw;
  cw.curves = {{{{1, 1}, {1, 0}}}, {{{1, 0}, {0, 0}}}, {{{0, 0}, {0, 1}}}, {{{0, 1}, {1, 1}}}};
  const auto canon = canonical_loop(cw);
  CHECK(canon == make_rectangle(0, 0, 1, 1));
  CHECK(signed_area(canon) > 0);

  SUBCASE("loops ordered by bounding-box corner") {
    ExtrudeStep step;
    step.loops = {make_rectangle(5, 5, 10, 10), make_rectangle(2, 9, 4, 12)};
    const auto sorted = canonical_sort(CadModel{{step}});
    CHECK(loop_bbox(sorted.steps[0].loops[0]).x == 2);
    CHECK(loop_bbox(sorted.steps[0].loops[0]).y == 9);
    CHECK(loop_bbox(sorted.steps[0].loops[1]).x == 5);
  }
  SUBCASE("circle unchanged") {
    const auto c = make_circle(30, 30, 5);
    CHECK(canonical_loop(c) == c);
  }
  SUBCASE("degenerate loop rejected") {
    Loop flat;
    flat.curves = {{{{0, 0}, {5, 5}}}, {{{5, 5}, {0, 0}}}};
    CHECK_THROWS_AS(canonical_loop(flat), ValidationError);
  }
  SUBCASE("idempotent on random models") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      const auto m = random_model(rng);
      CHECK(canonical_sort(m) == m);
    }
  }
}

TEST_CASE("tokenize single square step") {
  const auto tokens = tokenize(square_model());
  const TokenSequence expected = {
      tok::xy(0, 0),   tok::xy(63, 0),  tok::kSepCurve, tok::xy(63, 0),
      tok::xy(63, 63), tok::kSepCurve,  tok::xy(63, 63), tok::xy(0, 63),
      tok::kSepCurve,  tok::xy(0, 63),  tok::xy(0, 0),   tok::kEndLoop,
      tok::kEndProfile, tok::scalar(0), tok::scalar(0),  tok::scalar(0),
      tok::scalar(0),  tok::scalar(0),  tok::scalar(0),  tok::scalar(63),
      tok::scalar(63), tok::kBoolBase,  tok::kEndStep,   tok::kEos};
  CHECK(tokens == expected);
  CHECK(token_count(square_model()) == 24);
  const auto split = split_tokens(tokens);
  CHECK(split.geometry.size() == 13);
  CHECK(split.extrusion.size() == 9);
}

TEST_CASE("tokenize rejects invalid models") {
  CHECK_THROWS_AS(tokenize(CadModel{}), ValidationError);
  auto m = square_model();
  m.steps.resize(6, m.steps[0]);
  try {
    tokenize(m);
    FAIL("expected cap violation");
  } catch (const ValidationError& e) {
    CHECK(e.reason() == Reason::TooManySteps);
  }
}

TEST_CASE("detokenize round trip on random models") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto m = random_model(rng, {.max_steps = 5});
    CHECK(detokenize(tokenize(m)) == m);
  }
}

TEST_CASE("detokenize errors are located") {
  auto t = tokenize(square_model());
  SUBCASE("five-point curve") {
    TokenSequence bad = {tok::xy(0, 0), tok::xy(1, 0), tok::xy(1, 1), tok::xy(0, 1),
                         tok::xy(2, 2), tok::kEndLoop};
    CHECK(parse_reason(bad) == Reason::InvalidCurveArity);
    try {
      detokenize(bad);
    } catch (const ParseError& e) {
      CHECK(e.index() == 4);
    }
  }
  SUBCASE("truncated") {
    t.pop_back();
    CHECK(parse_reason(t) == Reason::UnexpectedEnd);
  }
  SUBCASE("open loop") {
    TokenSequence bad = {tok::xy(0, 0), tok::xy(5, 0), tok::kSepCurve, tok::xy(5, 0),
                         tok::xy(5, 5), tok::kEndLoop};
    CHECK(parse_reason(bad) == Reason::LoopNotClosed);
  }
  SUBCASE("disconnected curve") {
    TokenSequence bad = {tok::xy(0, 0), tok::xy(5, 0), tok::kSepCurve, tok::xy(6, 0)};
    CHECK(parse_reason(bad) == Reason::DisconnectedCurve);
  }
  SUBCASE("trailing tokens") {
    t.push_back(tok::kEos);
    CHECK(parse_reason(t) == Reason::TrailingTokens);
  }
  SUBCASE("empty") { CHECK(parse_reason({tok::kEos}) == Reason::EmptyModel); }
}

TEST_CASE("grammar totality under fuzzing") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> any(-3, tok::kVocabSize + 3);
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    TokenSequence t;
    if (i % 2 == 0) {
      t = tokenize(random_model(rng));
      const int edits = 1 + static_cast<int>(rng() % 3);
      for (int e = 0; e < edits; ++e) t[rng() % t.size()] = any(rng);
    } else {
      t.resize(rng() % 40);
      for (auto& v : t) v = any(rng);
    }
    try {
      detokenize(t);
      ++parsed;
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  CHECK(parsed + rejected == 3000);
  CHECK(rejected > 0);
}

TEST_CASE("constrained decoding masks keep every prefix completable") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    Grammar g(Caps{.max_tokens = 60});
    TokenSequence seq;
    while (!g.done()) {
      auto mask = g.allowed();
      std::vector<int> options;
      for (int t = 0; t < tok::kVocabSize; ++t) {
        if (mask[t]) options.push_back(t);
      }
      REQUIRE(!options.empty());
      // Bias towards structure tokens so sequences terminate.
      int pick = options[rng() % options.size()];
      for (int t : {tok::kEos, tok::kEndLoop, tok::kEndProfile}) {
        if (mask[t] && rng() % 3 == 0) pick = t;
      }
      g.advance(pick);
      seq.push_back(pick);
    }
    CHECK(seq.size() <= 60);
    CHECK_NOTHROW(detokenize(seq, Caps{.max_tokens = 60}));
  }
}

TEST_CASE("hash_tokens") {
  const auto a = tokenize(square_model());
  CHECK(hash_tokens(a) == hash_tokens(tokenize(square_model())));
  auto m = square_model();
  m.steps[0].distance = 62;
  const auto b = tokenize(m);
  CHECK(a != b);
  CHECK(hash_tokens(a) != hash_tokens(b));

  // Digests are pinned across builds and processes.
  std::ifstream in(std::string(HNC_TEST_DATA_DIR) + "/hash_golden.json");
  REQUIRE(in);
  const auto golden = nlohmann::json::parse(in);
  std::mt19937_64 rng(2024);
  for (const auto& entry : golden) {
    const auto model = random_model(rng);
    CHECK(hash_tokens(tokenize(model)) == entry.at("hash").get<std::uint64_t>());
    CHECK(tokenize(model).size() == entry.at("length").get<std::size_t>());
  }
}

TEST_CASE("json round trip and validation") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_model(rng);
    CHECK(model_from_json(to_json(m)) == m);
  }
  auto j = to_json(square_model());
  j["steps"][0]["loops"][0]["curves"][0]["pts"][0][0] = 64;
  CHECK_THROWS_AS(model_from_json(j), ValidationError);
}

TEST_CASE("arc geometry") {
  const auto c = circumcircle({0, 0}, {0.5, 0.5}, {1, 0});
  REQUIRE(c);
  CHECK(c->center.x == doctest::Approx(0.5));
  CHECK(c->center.y == doctest::Approx(0.0));
  CHECK(c->radius == doctest::Approx(0.5));
  CHECK_FALSE(circumcircle({0, 0}, {0.5, 0.5}, {1, 1}));
}
