#include "hnc/nn/tape.hpp"

#include <stdexcept>

namespace hnc::nn {

template <class T>
Parameter<T>& ParameterSet<T>::add(const std::string& name, int rows, int cols, Init init, bool decay) {
  if (find(name)) throw std::invalid_argument("duplicate parameter " + name);
  auto p = std::make_unique<Parameter<T>>(name, rows, cols, decay);
  switch (init) {
    case Init::Zeros: break;
    case Init::Ones: p->value.setOnes(); break;
    case Init::Normal: {
      std::normal_distribution<double> n(0.0, 0.02);
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        double v;
        do {
          v = n(rng_);
        } while (std::abs(v) > 0.04);
        p->value.data()[i] = static_cast<T>(v);
      }
      break;
    }
  }
  params_.push_back(std::move(p));
  return *params_.back();
}

template <class T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <class T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <class T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

template <class T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <class T>
Var Tape<T>::constant(Mat value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

template <class T>
Var Tape<T>::param(Parameter<T>& p) {
  Node n;
  n.ref = &p.value;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

template <class T>
Var Tape<T>::record(Mat value, std::initializer_list<Var> inputs, Backward back) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(back));
}

template <class T>
Var Tape<T>::record(Mat value, const std::vector<Var>& inputs, Backward back) {
  Node n;
  n.value = std::move(value);
  for (Var v : inputs) n.needs_grad = n.needs_grad || nodes_[v.id].needs_grad;
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

template <class T>
void Tape<T>::backward(Var loss) {
  Node& root = nodes_[loss.id];
  if (root.value.size() != 1) throw std::invalid_argument("backward needs a scalar node");
  if (!root.needs_grad) return;
  root.grad = Mat::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.back) n.back(*this, Var{i});
    if (n.param) n.param->grad += n.grad;
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace hnc::nn
