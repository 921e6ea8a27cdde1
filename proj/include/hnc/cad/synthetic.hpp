#pragma once

#include <random>

#include "hnc/cad/model.hpp"

namespace hnc::cad {

// Random canonical sketch-and-extrude models for tests, demos and toy corpora.
struct SyntheticOptions {
  int min_steps = 1;
  int max_steps = 3;
  int max_inner_loops = 2;
  double cut_probability = 0.2;
  bool axis_aligned = false;  // all plane angles zero
};

Loop make_rectangle(int x0, int y0, int x1, int y1);
Loop make_circle(int cx, int cy, int r);
Loop make_triangle(Point a, Point b, Point c);
// Rectangle whose top edge is replaced by an arc bulging upwards by `bulge`.
Loop make_arch(int x0, int y0, int x1, int y1, int bulge);

CadModel random_model(std::mt19937_64& rng, const SyntheticOptions& options = {});

}  // namespace hnc::cad
