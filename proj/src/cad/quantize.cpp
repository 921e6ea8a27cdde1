#include "hnc/cad/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hnc/cad/model.hpp"

namespace hnc::cad {

int quantize_coord(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::out_of_range("quantize_coord: value " + std::to_string(v) +
                            " outside [0, 1]");
  }
  return std::min(kMaxBin, static_cast<int>(std::floor(v * kBins)));
}

double dequantize_coord(int q) {
  if (q < 0 || q > kMaxBin) {
    throw std::out_of_range("dequantize_coord: bin " + std::to_string(q));
  }
  return (q + 0.5) / kBins;
}

int quantize_clamped(double v) { return quantize_coord(std::clamp(v, 0.0, 1.0)); }

}  // namespace hnc::cad
