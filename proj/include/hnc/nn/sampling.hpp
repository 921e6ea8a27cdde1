#pragma once

#include <random>
#include <vector>

namespace hnc::nn {

// Softmax of logits restricted to allowed classes (all when `allowed` is empty).
std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<bool>& allowed);

// Nucleus support: indices sorted by descending probability (lower index first
// on ties), cut at the shortest prefix whose mass reaches p, renormalized.
std::vector<std::pair<int, double>> nucleus_support(const std::vector<double>& probs, double p);

// p <= 0 selects the argmax.
int nucleus_sample(const std::vector<double>& probs, double p, std::mt19937_64& rng);
int argmax(const std::vector<double>& values);

}  // namespace hnc::nn
