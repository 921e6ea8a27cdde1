#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hnc/cad/plane.hpp"
#include "hnc/cad/quantize.hpp"
#include "hnc/cad/synthetic.hpp"
#include "hnc/geometry/discretize.hpp"
#include "hnc/geometry/export.hpp"
#include "hnc/geometry/mesh.hpp"
#include "hnc/geometry/raster.hpp"
#include "hnc/geometry/sample.hpp"
#include "hnc/geometry/voxel.hpp"

using namespace hnc;
using namespace hnc::geometry;

namespace {

// Independent crossing-number test with a boundary-inclusive check, used as
// the oracle for the scanline rasterizer.
bool oracle_inside(const std::vector<Polyline2D>& loops, double px, double py) {
  bool inside = false;
  for (const auto& l : loops) {
    for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
      const auto a = l.points[i], b = l.points[i + 1];
      const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
      const bool within = std::min(a.x, b.x) - 1e-12 <= px && px <= std::max(a.x, b.x) + 1e-12 &&
                          std::min(a.y, b.y) - 1e-12 <= py && py <= std::max(a.y, b.y) + 1e-12;
      if (std::abs(cross) < 1e-12 && within) return true;
      if ((a.y > py) != (b.y > py)) {
        const double x = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
        if (px < x) inside = !inside;
      }
    }
  }
  return inside;
}

std::size_t oracle_count(const std::vector<Polyline2D>& loops, int r) {
  std::size_t n = 0;
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) n += oracle_inside(loops, (i + 0.5) / r, (j + 0.5) / r);
  }
  return n;
}

cad::ExtrudeStep box_step(int x0, int y0, int x1, int y1, int distance,
                          cad::BoolOp op = cad::BoolOp::Union) {
  cad::ExtrudeStep step;
  step.loops = {cad::make_rectangle(x0, y0, x1, y1)};
  step.distance = distance;
  step.op = op;
  return step;
}

}  // namespace

TEST_CASE("discretize_loop") {
  SUBCASE("square keeps its corners") {
    const auto line = discretize_loop(cad::make_rectangle(0, 0, 63, 63));
    REQUIRE(line.points.size() == 5);
    CHECK(line.points.front().x == line.points.back().x);
    CHECK(line.points[1].x == cad::dequantize_coord(63));
    CHECK(line.points[1].y == cad::dequantize_coord(0));
  }
  SUBCASE("circle center and radius") {
    // Bins of (0.25,0.5), (0.5,0.75), (0.75,0.5), (0.5,0.25).
    cad::Loop loop;
    loop.curves = {{{{16, 32}, {32, 48}, {48, 32}, {32, 16}}}};
    const auto line = discretize_loop(loop, 32);
    CHECK(line.segments() == 32);
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < 32; ++i) {
      cx += line.points[i].x / 32;
      cy += line.points[i].y / 32;
    }
    CHECK(cx == doctest::Approx(0.5).epsilon(0.02));
    CHECK(cy == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::hypot(line.points[0].x - cx, line.points[0].y - cy) == doctest::Approx(0.25));
  }
  SUBCASE("zero-radius circle") {
    cad::Loop loop;
    loop.curves = {{{{5, 5}, {5, 5}, {5, 5}, {5, 5}}}};
    CHECK_THROWS_AS(discretize_loop(loop), cad::ValidationError);
  }
  SUBCASE("arc sweeps through its middle point") {
    const auto loop = cad::make_arch(10, 10, 40, 30, 8);
    const auto line = discretize_loop(loop, 32);
    double top = 0;
    for (const auto& p : line.points) top = std::max(top, p.y);
    CHECK(top == doctest::Approx(cad::dequantize_coord(38)).epsilon(1e-3));
  }
}

TEST_CASE("arc length converges with sampling") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> bin(0, 63);
  int checked = 0;
  while (checked < 50) {
    cad::Curve arc{{{bin(rng), bin(rng)}, {bin(rng), bin(rng)}, {bin(rng), bin(rng)}}};
    if (!cad::circumcircle(cad::dequantize(arc.points[0]), cad::dequantize(arc.points[1]),
                           cad::dequantize(arc.points[2]))) {
      continue;
    }
    auto length = [&](int k) {
      const auto pts = cad::sample_curve(arc, k);
      Polyline2D line{pts};
      line.points.push_back(cad::dequantize(arc.points[2]));
      return polyline_length(line);
    };
    for (int k : {32, 64}) {
      const double a = length(k), b = length(2 * k);
      CHECK(std::abs(a - b) / b < 0.01);
    }
    ++checked;
  }
}

TEST_CASE("rasterize_profile") {
  SUBCASE("full-extent square fills every cell") {
    const auto loops = discretize_profile({cad::make_rectangle(0, 0, 63, 63)});
    const auto mask = rasterize_profile(loops, 32);
    CHECK(mask.count() == 1024);
    CHECK(oracle_count(loops, 32) == 1024);
  }
  SUBCASE("centered hole") {
    const auto loops = discretize_profile(
        {cad::make_rectangle(0, 0, 63, 63), cad::make_rectangle(16, 16, 47, 47)});
    for (int r : {32, 64}) {
      const auto mask = rasterize_profile(loops, r);
      CHECK(mask.count() == oracle_count(loops, r));
      const double ratio = static_cast<double>(mask.count()) / (r * r);
      CHECK(std::abs(ratio - 0.75) <= 4.0 / r);
    }
  }
  SUBCASE("random profiles agree with the oracle") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 40; ++i) {
      const auto model = cad::random_model(rng, {.min_steps = 1, .max_steps = 1});
      const auto loops = discretize_profile(model.steps[0].loops);
      const auto mask = rasterize_profile(loops, 48);
      for (int j = 0; j < 48; ++j) {
        for (int k = 0; k < 48; ++k) {
          REQUIRE(mask.at(k, j) == oracle_inside(loops, (k + 0.5) / 48, (j + 0.5) / 48));
        }
      }
    }
  }
  SUBCASE("empty profile") { CHECK(rasterize_profile({}, 32).count() == 0); }
}

TEST_CASE("execute_model booleans") {
  SUBCASE("full square over the full range") {
    cad::CadModel m{{box_step(0, 0, 63, 63, 63)}};
    CHECK(execute_model(m, 64).grid.count() == 64u * 64 * 64);
    CHECK(execute_model(m, 32).grid.count() == 32u * 32 * 32);
  }
  SUBCASE("union then cut of the same step is empty") {
    cad::CadModel m{{box_step(5, 5, 40, 40, 20), box_step(5, 5, 40, 40, 20, cad::BoolOp::Cut)}};
    CHECK(execute_model(m, 64).grid.count() == 0);
  }
  SUBCASE("disjoint halves add up") {
    const auto a = execute_model(cad::CadModel{{box_step(0, 0, 31, 63, 63)}}, 64).grid.count();
    const auto b = execute_model(cad::CadModel{{box_step(32, 0, 63, 63, 63)}}, 64).grid.count();
    const auto both =
        execute_model(cad::CadModel{{box_step(0, 0, 31, 63, 63), box_step(32, 0, 63, 63, 63)}}, 64)
            .grid.count();
    CHECK(a == 32u * 64 * 64);
    CHECK(b == 32u * 64 * 64);
    CHECK(both == a + b);
  }
  SUBCASE("intersect") {
    cad::CadModel m{{box_step(0, 0, 40, 63, 63), box_step(20, 0, 63, 63, 63, cad::BoolOp::Intersect)}};
    const auto g = execute_model(m, 64).grid;
    CHECK(g.count() > 0);
    CHECK(g.count() < 32u * 64 * 64);
  }
  SUBCASE("empty step is skipped and recorded") {
    auto step = box_step(0, 0, 10, 10, 10);
    step.plane.origin = {63, 63, 63};
    step.plane.angles = {0, 16, 0};  // points the extrusion out of the cube
    const auto r = execute_model(cad::CadModel{{box_step(0, 0, 10, 10, 10), step}}, 32);
    CHECK(r.skipped_steps == std::vector<int>{1});
    CHECK(r.warnings.size() == 1);
  }
  SUBCASE("extrusion depth follows the distance bin") {
    const auto g = execute_model(cad::CadModel{{box_step(0, 0, 63, 63, 15)}}, 64).grid;
    // Depth (15 + .5)/64 covers voxel layers 0..15.
    CHECK(g.count() == 64u * 64 * 16);
  }
}

TEST_CASE("voxel CSG properties on random models") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    auto model = cad::random_model(rng, {.min_steps = 2, .max_steps = 3, .cut_probability = 0});
    auto reversed = model;
    std::reverse(reversed.steps.begin(), reversed.steps.end());
    const auto g = execute_model(model, 32).grid;
    CHECK(g == execute_model(reversed, 32).grid);

    // Monotonicity under an added union / cut step.
    auto extra = cad::random_model(rng, {.min_steps = 1, .max_steps = 1}).steps[0];
    auto with_union = model;
    extra.op = cad::BoolOp::Union;
    with_union.steps.push_back(extra);
    const auto gu = execute_model(with_union, 32).grid;
    auto with_cut = model;
    extra.op = cad::BoolOp::Cut;
    with_cut.steps.push_back(extra);
    const auto gc = execute_model(with_cut, 32).grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.bits()[i]) REQUIRE(gu.bits()[i]);
      if (!g.bits()[i]) REQUIRE(!gc.bits()[i]);
    }
  }
}

TEST_CASE("mesh_model") {
  SUBCASE("unit-square prism") {
    const auto mesh = mesh_model(cad::CadModel{{box_step(0, 0, 63, 63, 63)}}, 32, 32);
    // 4 wall quads, and 32 full-row runs on each of the two caps.
    CHECK(mesh.triangles.size() == 8 + 2 * 2 * 32);
    for (const auto& t : mesh.triangles) {
      for (int v : t) CHECK(v < static_cast<int>(mesh.vertices.size()));
    }
  }
  SUBCASE("circle prism walls") {
    cad::ExtrudeStep step;
    step.loops = {cad::make_circle(32, 32, 20)};
    step.distance = 30;
    const auto mesh = mesh_model(cad::CadModel{{step}}, 32, 8);
    int walls = 0;
    const auto caps = rasterize_profile(discretize_profile(step.loops), 8);
    (void)caps;
    // Caps triangles lie in planes z = 0 or z = depth; the rest are walls.
    for (const auto& t : mesh.triangles) {
      const double z0 = mesh.vertices[t[0]].z(), z1 = mesh.vertices[t[1]].z(),
                   z2 = mesh.vertices[t[2]].z();
      if (!(z0 == z1 && z1 == z2)) ++walls;
    }
    CHECK(walls == 64);
  }
  SUBCASE("cut steps are flagged") {
    const auto mesh = mesh_model(cad::CadModel{{box_step(0, 0, 40, 40, 20),
                                                box_step(10, 10, 20, 20, 20, cad::BoolOp::Cut)}});
    CHECK(mesh.step_is_cut == std::vector<bool>{false, true});
    CHECK(to_obj(mesh).find("usemtl cut") != std::string::npos);
  }
  SUBCASE("empty model") { CHECK(mesh_model(cad::CadModel{}).empty()); }
}

TEST_CASE("sample_surface") {
  std::mt19937_64 rng(1);
  SUBCASE("single voxel") {
    VoxelGrid g(8);
    g.set(3, 4, 5);
    const auto cloud = sample_surface(g, 500, rng);
    CHECK(cloud.size() == 500);
    for (const auto& p : cloud.points) {
      const Eigen::Vector3d q = p * 8.0;
      const bool on_face = q.x() == 3 || q.x() == 4 || q.y() == 4 || q.y() == 5 ||
                           q.z() == 5 || q.z() == 6;
      CHECK(on_face);
      CHECK(q.x() >= 3);
      CHECK(q.x() <= 4);
    }
  }
  SUBCASE("zero points") {
    VoxelGrid g(4);
    g.set(0, 0, 0);
    CHECK(sample_surface(g, 0, rng).empty());
  }
  SUBCASE("full grid samples only the shell") {
    const auto g = execute_model(cad::CadModel{{box_step(0, 0, 63, 63, 63)}}, 16).grid;
    for (const auto& p : sample_surface(g, 400, rng).points) {
      const bool shell = p.x() == 0 || p.x() == 1 || p.y() == 0 || p.y() == 1 ||
                         p.z() == 0 || p.z() == 1;
      CHECK(shell);
    }
  }
  SUBCASE("points stay near occupied voxels") {
    std::mt19937_64 mrng(8);
    const auto g = execute_model(cad::random_model(mrng), 32).grid;
    if (!g.empty()) {
      const double diag = std::sqrt(3.0) / 32;
      for (const auto& p : sample_surface(g, 300, rng).points) {
        double best = 1e9;
        for (int k = 0; k < 32; ++k)
          for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i)
              if (g.at(i, j, k)) {
                const Eigen::Vector3d c((i + .5) / 32, (j + .5) / 32, (k + .5) / 32);
                best = std::min(best, (c - p).norm());
              }
        CHECK(best <= diag);
      }
    }
  }
  SUBCASE("empty grid") { CHECK_THROWS_AS(sample_surface(VoxelGrid(4), 10, rng), std::invalid_argument); }
}

TEST_CASE("voxel file format") {
  VoxelGrid g(5);
  g.set(0, 0, 0);
  g.set(4, 3, 2);
  std::stringstream buf;
  write_voxels(g, buf);
  const auto bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "HNCV");
  CHECK(static_cast<unsigned char>(bytes[4]) == 5);
  CHECK(bytes.size() == 16 + (125 + 7) / 8);
  CHECK(read_voxels(buf) == g);
}
