#pragma once

#include <vector>

#include "json.hpp"

#include "hnc/nn/tape.hpp"

namespace hnc::nn {

struct AdamWConfig {
  double lr = 1e-3;
  int warmup = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 0.0;  // 0 disables global gradient-norm clipping

  nlohmann::json to_json() const;
  static AdamWConfig from_json(const nlohmann::json& j);
};

// Linear warm-up: lr * min(1, step / warmup), step counted from 1.
double warmup_lr(const AdamWConfig& cfg, long step);

template <class T>
class AdamW {
 public:
  AdamW(ParameterSet<T>& params, AdamWConfig cfg);

  // Applies one update from the accumulated gradients; does not zero them.
  void step();
  long steps() const { return t_; }
  double current_lr() const { return warmup_lr(cfg_, t_); }
  const AdamWConfig& config() const { return cfg_; }

 private:
  ParameterSet<T>& params_;
  AdamWConfig cfg_;
  std::vector<Matrix<T>> m_, v_;
  long t_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace hnc::nn
