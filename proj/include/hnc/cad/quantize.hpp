#pragma once

namespace hnc::cad {

// min(63, floor(v * 64)) for v in [0, 1]; throws std::out_of_range otherwise.
int quantize_coord(double v);

// Bin center, (q + 0.5) / 64.
double dequantize_coord(int q);

// Clamps v to [0, 1] before quantizing.
int quantize_clamped(double v);

}  // namespace hnc::cad
