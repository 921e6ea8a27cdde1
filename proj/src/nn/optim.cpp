#include "hnc/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace hnc::nn {

using nlohmann::json;

json AdamWConfig::to_json() const {
  return {{"lr", lr},   {"warmup", warmup},          {"beta1", beta1},        {"beta2", beta2},
          {"eps", eps}, {"weight_decay", weight_decay}, {"clip_norm", clip_norm}};
}

AdamWConfig AdamWConfig::from_json(const json& j) {
  AdamWConfig c;
  c.lr = j.value("lr", c.lr);
  c.warmup = j.value("warmup", c.warmup);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  return c;
}

double warmup_lr(const AdamWConfig& cfg, long step) {
  if (cfg.warmup <= 0) return cfg.lr;
  return cfg.lr * std::min(1.0, static_cast<double>(step) / cfg.warmup);
}

template <class T>
AdamW<T>::AdamW(ParameterSet<T>& params, AdamWConfig cfg) : params_(params), cfg_(cfg) {
  for (const auto& p : params_.all()) {
    m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <class T>
void AdamW<T>::step() {
  ++t_;
  const double lr = warmup_lr(cfg_, t_);
  double clip = 1.0;
  if (cfg_.clip_norm > 0) {
    double sq = 0;
    for (const auto& p : params_.all()) sq += static_cast<double>(p->grad.squaredNorm());
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const auto& all = params_.all();
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& p = *all[i];
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const Matrix<T> g = p.grad * static_cast<T>(clip);
    m_[i] = b1 * m_[i] + (T(1) - b1) * g;
    v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
    if (p.decay && cfg_.weight_decay > 0) p.value *= static_cast<T>(1.0 - lr * cfg_.weight_decay);
    const T step = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    p.value.array() -= step * m_[i].array() / ((v_[i].array().sqrt() * inv_bc2) + static_cast<T>(cfg_.eps));
  }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace hnc::nn
