#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hnc::nn {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool decay = true;  // weight decay applies; off for biases, norms, embeddings

  Parameter(std::string n, int rows, int cols, bool d)
      : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)), decay(d) {}
  void zero_grad() { grad.setZero(); }
};

enum class Init { Zeros, Ones, Normal };

// Owns parameters; insertion order is stable and defines checkpoint layout.
template <class T>
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed = 0) : rng_(seed) {}

  // Normal init is a normal truncated at two standard deviations (0.02).
  Parameter<T>& add(const std::string& name, int rows, int cols, Init init, bool decay);
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;
  const std::vector<std::unique_ptr<Parameter<T>>>& all() const { return params_; }
  void zero_grad();
  std::size_t scalar_count() const;
  std::mt19937_64& rng() { return rng_; }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::mt19937_64 rng_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Every op records its output value and a closure that
// pushes the output gradient to its inputs. Nodes that do not depend on a
// parameter or on a constant marked trainable carry no gradient.
template <class T>
class Tape {
 public:
  using Mat = Matrix<T>;
  using Backward = std::function<void(Tape&, Var self)>;

  explicit Tape(bool training = false, std::uint64_t seed = 0) : training_(training), rng_(seed) {}

  Var constant(Mat value, bool requires_grad = false);
  Var param(Parameter<T>& p);
  Var record(Mat value, std::initializer_list<Var> inputs, Backward back);
  Var record(Mat value, const std::vector<Var>& inputs, Backward back);

  const Mat& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
  }
  // Empty when no gradient reached the node.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  template <class E>
  void accumulate(Var v, const E& expr) {
    Node& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = expr;
    } else {
      n.grad += expr;
    }
  }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node, runs the closures in reverse
  // and adds parameter gradients into Parameter::grad.
  void backward(Var loss);

  bool training() const { return training_; }
  std::mt19937_64& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* ref = nullptr;
    Mat grad;
    Backward back;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  bool training_;
  std::mt19937_64 rng_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace hnc::nn
