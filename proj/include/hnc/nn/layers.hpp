#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "hnc/nn/ops.hpp"
#include "hnc/nn/tape.hpp"

namespace hnc::nn {

struct BlockConfig {
  int d_model = 256;
  int d_ff = 512;
  int heads = 8;
  double dropout = 0.1;
  int layers = 6;
  bool pre_norm = true;

  nlohmann::json to_json() const;
  static BlockConfig from_json(const nlohmann::json& j);
};

template <class T>
struct Linear {
  Parameter<T>* w = nullptr;  // in x out
  Parameter<T>* b = nullptr;  // 1 x out

  Linear() = default;
  Linear(ParameterSet<T>& ps, const std::string& name, int in, int out);
  Var operator()(Tape<T>& t, Var x) const;
  Matrix<T> apply(const Matrix<T>& x) const;
};

template <class T>
struct LayerNorm {
  Parameter<T>* gain = nullptr;
  Parameter<T>* bias = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterSet<T>& ps, const std::string& name, int dim);
  Var operator()(Tape<T>& t, Var x) const;
  Matrix<T> apply(const Matrix<T>& x) const;
};

// Linear -> ReLU -> Linear.
template <class T>
struct Mlp {
  Linear<T> l1, l2;
  double dropout = 0.0;

  Mlp() = default;
  Mlp(ParameterSet<T>& ps, const std::string& name, int in, int hidden, int out, double dropout = 0.0);
  Var operator()(Tape<T>& t, Var x) const;
  Matrix<T> apply(const Matrix<T>& x) const;
};

template <class T>
struct MultiHeadAttention {
  Linear<T> wq, wk, wv, wo;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet<T>& ps, const std::string& name, int d_model, int heads);
  Var operator()(Tape<T>& t, Var xq, Var xkv, const Segments& qs, const Segments& ks, bool causal) const;
};

// Keys and values for cross-attention, packed by segment like the queries.
template <class T>
struct Memory {
  Var value;
  Segments segs;
};

template <class T>
struct DecodeState;

// Pre-LN block: x + SA(LN x), optionally x + CA(LN x, memory), x + FF(LN x).
// Query rows whose memory segment is empty receive no cross-attention update.
template <class T>
struct TransformerLayer {
  LayerNorm<T> ln_sa, ln_ca, ln_ff;
  MultiHeadAttention<T> sa, ca;
  Mlp<T> ff;
  bool cross = false;
  double dropout = 0.0;

  TransformerLayer() = default;
  TransformerLayer(ParameterSet<T>& ps, const std::string& name, const BlockConfig& cfg, bool cross);
  Var forward(Tape<T>& t, Var x, const Segments& segs, bool causal, const Memory<T>* memory) const;
};

// Per-stream cache for incremental causal decoding.
template <class T>
struct DecodeState {
  std::vector<Matrix<T>> k, v;          // per layer, capacity rows
  std::vector<Matrix<T>> mem_k, mem_v;  // per layer, one row per memory item
  int length = 0;
};

template <class T>
struct TransformerStack {
  std::vector<TransformerLayer<T>> layers;
  LayerNorm<T> final_norm;
  BlockConfig cfg;

  TransformerStack() = default;
  TransformerStack(ParameterSet<T>& ps, const std::string& name, const BlockConfig& cfg, bool cross);
  Var forward(Tape<T>& t, Var x, const Segments& segs, bool causal, const Memory<T>* memory = nullptr) const;

  // Incremental decoding without a tape. `memory` rows are projected once per
  // stream; an empty matrix disables cross-attention for that stream.
  DecodeState<T> start(const Matrix<T>& memory, int capacity) const;
  // One new row per stream; returns the final-normed outputs.
  Matrix<T> step(const Matrix<T>& x, const std::vector<DecodeState<T>*>& states) const;
};

extern template struct Linear<float>;
extern template struct Linear<double>;
extern template struct LayerNorm<float>;
extern template struct LayerNorm<double>;
extern template struct Mlp<float>;
extern template struct Mlp<double>;
extern template struct MultiHeadAttention<float>;
extern template struct MultiHeadAttention<double>;
extern template struct TransformerLayer<float>;
extern template struct TransformerLayer<double>;
extern template struct TransformerStack<float>;
extern template struct TransformerStack<double>;

}  // namespace hnc::nn
