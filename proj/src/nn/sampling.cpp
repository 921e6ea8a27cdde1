#include "hnc/nn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hnc::nn {

std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<bool>& allowed) {
  const bool all = allowed.empty();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (all || allowed[i]) mx = std::max(mx, logits[i]);
  }
  if (!std::isfinite(mx)) throw std::invalid_argument("no allowed class");
  std::vector<double> p(logits.size(), 0.0);
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (all || allowed[i]) total += p[i] = std::exp(logits[i] - mx);
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::pair<int, double>> nucleus_support(const std::vector<double>& probs, double p) {
  if (probs.empty()) throw std::invalid_argument("empty distribution");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });
  std::vector<std::pair<int, double>> out;
  double mass = 0;
  for (int i : order) {
    if (probs[i] <= 0 && !out.empty()) break;
    out.emplace_back(i, probs[i]);
    mass += probs[i];
    if (mass >= p - 1e-12) break;
  }
  for (auto& [i, q] : out) q /= mass;
  return out;
}

int nucleus_sample(const std::vector<double>& probs, double p, std::mt19937_64& rng) {
  if (p <= 0) return argmax(probs);
  const auto support = nucleus_support(probs, p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng), acc = 0;
  for (const auto& [i, q] : support) {
    acc += q;
    if (r < acc) return i;
  }
  return support.back().first;
}

int argmax(const std::vector<double>& values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace hnc::nn
