#include "hnc/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace hnc::nn {

using nlohmann::json;

json BlockConfig::to_json() const {
  return {{"d_model", d_model}, {"d_ff", d_ff},     {"heads", heads},
          {"dropout", dropout}, {"layers", layers}, {"pre_norm", pre_norm}};
}

BlockConfig BlockConfig::from_json(const json& j) {
  BlockConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.heads = j.value("heads", c.heads);
  c.dropout = j.value("dropout", c.dropout);
  c.layers = j.value("layers", c.layers);
  c.pre_norm = j.value("pre_norm", c.pre_norm);
  if (c.d_model % c.heads != 0) throw std::invalid_argument("d_model must be divisible by heads");
  if (!c.pre_norm) throw std::invalid_argument("only pre-norm blocks are supported");
  return c;
}

template <class T>
Linear<T>::Linear(ParameterSet<T>& ps, const std::string& name, int in, int out)
    : w(&ps.add(name + ".w", in, out, Init::Normal, true)), b(&ps.add(name + ".b", 1, out, Init::Zeros, false)) {}

template <class T>
Var Linear<T>::operator()(Tape<T>& t, Var x) const {
  return add_row(t, matmul(t, x, t.param(*w)), t.param(*b));
}

template <class T>
Matrix<T> Linear<T>::apply(const Matrix<T>& x) const {
  Matrix<T> y = x * w->value;
  y.rowwise() += b->value.row(0);
  return y;
}

template <class T>
LayerNorm<T>::LayerNorm(ParameterSet<T>& ps, const std::string& name, int dim)
    : gain(&ps.add(name + ".g", 1, dim, Init::Ones, false)), bias(&ps.add(name + ".b", 1, dim, Init::Zeros, false)) {}

template <class T>
Var LayerNorm<T>::operator()(Tape<T>& t, Var x) const {
  return layer_norm(t, x, t.param(*gain), t.param(*bias));
}

template <class T>
Matrix<T> LayerNorm<T>::apply(const Matrix<T>& x) const {
  Matrix<T> y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    const T inv = T(1) / std::sqrt(var + T(1e-5));
    y.row(i) = ((x.row(i).array() - mean) * inv) * gain->value.row(0).array() + bias->value.row(0).array();
  }
  return y;
}

template <class T>
Mlp<T>::Mlp(ParameterSet<T>& ps, const std::string& name, int in, int hidden, int out, double drop)
    : l1(ps, name + ".l1", in, hidden), l2(ps, name + ".l2", hidden, out), dropout(drop) {}

template <class T>
Var Mlp<T>::operator()(Tape<T>& t, Var x) const {
  return l2(t, nn::dropout(t, relu(t, l1(t, x)), dropout));
}

template <class T>
Matrix<T> Mlp<T>::apply(const Matrix<T>& x) const {
  return l2.apply(l1.apply(x).cwiseMax(T(0)));
}

template <class T>
MultiHeadAttention<T>::MultiHeadAttention(ParameterSet<T>& ps, const std::string& name, int d, int h)
    : wq(ps, name + ".q", d, d), wk(ps, name + ".k", d, d), wv(ps, name + ".v", d, d), wo(ps, name + ".o", d, d), heads(h) {
  if (d % h != 0) throw std::invalid_argument("d_model must be divisible by heads");
}

template <class T>
Var MultiHeadAttention<T>::operator()(Tape<T>& t, Var xq, Var xkv, const Segments& qs, const Segments& ks,
                                      bool causal) const {
  const Var q = wq(t, xq);
  const Var k = wk(t, xkv);
  const Var v = wv(t, xkv);
  return wo(t, attention(t, q, k, v, heads, qs, ks, causal));
}

template <class T>
TransformerLayer<T>::TransformerLayer(ParameterSet<T>& ps, const std::string& name, const BlockConfig& cfg, bool c)
    : ln_sa(ps, name + ".ln_sa", cfg.d_model),
      sa(ps, name + ".sa", cfg.d_model, cfg.heads),
      ff(),
      cross(c),
      dropout(cfg.dropout) {
  if (cross) {
    ln_ca = LayerNorm<T>(ps, name + ".ln_ca", cfg.d_model);
    ca = MultiHeadAttention<T>(ps, name + ".ca", cfg.d_model, cfg.heads);
  }
  ln_ff = LayerNorm<T>(ps, name + ".ln_ff", cfg.d_model);
  ff = Mlp<T>(ps, name + ".ff", cfg.d_model, cfg.d_ff, cfg.d_model, 0.0);
}

template <class T>
Var TransformerLayer<T>::forward(Tape<T>& t, Var x, const Segments& segs, bool causal, const Memory<T>* memory) const {
  const Var h = ln_sa(t, x);
  x = add(t, x, nn::dropout(t, sa(t, h, h, segs, segs, causal), dropout));
  if (cross && memory) {
    std::vector<T> mask(segs.rows(), T(1));
    bool any_empty = false;
    for (int s = 0; s < segs.count(); ++s) {
      if (memory->segs.length(s) == 0) {
        any_empty = true;
        for (int r = 0; r < segs.length(s); ++r) mask[segs.begin(s) + r] = T(0);
      }
    }
    Var delta = ca(t, ln_ca(t, x), memory->value, segs, memory->segs, false);
    if (any_empty) delta = row_scale(t, delta, mask);
    x = add(t, x, nn::dropout(t, delta, dropout));
  }
  return add(t, x, nn::dropout(t, ff(t, ln_ff(t, x)), dropout));
}

template <class T>
TransformerStack<T>::TransformerStack(ParameterSet<T>& ps, const std::string& name, const BlockConfig& c, bool cross)
    : cfg(c) {
  for (int i = 0; i < cfg.layers; ++i) {
    layers.emplace_back(ps, name + "." + std::to_string(i), cfg, cross);
  }
  final_norm = LayerNorm<T>(ps, name + ".ln_out", cfg.d_model);
}

template <class T>
Var TransformerStack<T>::forward(Tape<T>& t, Var x, const Segments& segs, bool causal, const Memory<T>* memory) const {
  for (const auto& layer : layers) x = layer.forward(t, x, segs, causal, memory);
  return final_norm(t, x);
}

template <class T>
DecodeState<T> TransformerStack<T>::start(const Matrix<T>& memory, int capacity) const {
  DecodeState<T> st;
  for (const auto& layer : layers) {
    st.k.push_back(Matrix<T>(capacity, cfg.d_model));
    st.v.push_back(Matrix<T>(capacity, cfg.d_model));
    if (layer.cross && memory.rows() > 0) {
      st.mem_k.push_back(layer.ca.wk.apply(memory));
      st.mem_v.push_back(layer.ca.wv.apply(memory));
    } else {
      st.mem_k.push_back(Matrix<T>(0, cfg.d_model));
      st.mem_v.push_back(Matrix<T>(0, cfg.d_model));
    }
  }
  return st;
}

namespace {

// Single-query attention of row q against the first n rows of k and v.
template <class T>
void attend_row(const T* q, const Matrix<T>& k, const Matrix<T>& v, int n, int heads, T* out) {
  const int d = static_cast<int>(k.cols());
  const int dh = d / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(dh));
  Eigen::Matrix<T, Eigen::Dynamic, 1> s(n);
  for (int h = 0; h < heads; ++h) {
    const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> qh(q + h * dh, dh);
    s = k.block(0, h * dh, n, dh) * qh * sc;
    const T mx = s.maxCoeff();
    s = (s.array() - mx).exp();
    s /= s.sum();
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> o(out + h * dh, dh);
    o = s.transpose() * v.block(0, h * dh, n, dh);
  }
}

}  // namespace

template <class T>
Matrix<T> TransformerStack<T>::step(const Matrix<T>& x_in, const std::vector<DecodeState<T>*>& states) const {
  Matrix<T> x = x_in;
  const int b = static_cast<int>(x.rows());
  if (static_cast<int>(states.size()) != b) throw std::invalid_argument("one decode state per row");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    {
      const Matrix<T> h = layer.ln_sa.apply(x);
      const Matrix<T> q = layer.sa.wq.apply(h);
      const Matrix<T> k = layer.sa.wk.apply(h);
      const Matrix<T> v = layer.sa.wv.apply(h);
      Matrix<T> o(b, cfg.d_model);
      for (int i = 0; i < b; ++i) {
        auto& st = *states[i];
        if (st.length >= st.k[l].rows()) throw std::length_error("decode capacity exceeded");
        st.k[l].row(st.length) = k.row(i);
        st.v[l].row(st.length) = v.row(i);
        attend_row<T>(q.row(i).data(), st.k[l], st.v[l], st.length + 1, layer.sa.heads, o.row(i).data());
      }
      x += layer.sa.wo.apply(o);
    }
    if (layer.cross) {
      const Matrix<T> h = layer.ln_ca.apply(x);
      const Matrix<T> q = layer.ca.wq.apply(h);
      Matrix<T> o = Matrix<T>::Zero(b, cfg.d_model);
      std::vector<char> has(b, 0);
      for (int i = 0; i < b; ++i) {
        const auto& st = *states[i];
        const int n = static_cast<int>(st.mem_k[l].rows());
        if (n == 0) continue;
        has[i] = 1;
        attend_row<T>(q.row(i).data(), st.mem_k[l], st.mem_v[l], n, layer.ca.heads, o.row(i).data());
      }
      const Matrix<T> delta = layer.ca.wo.apply(o);
      for (int i = 0; i < b; ++i) {
        if (has[i]) x.row(i) += delta.row(i);
      }
    }
    x += layer.ff.apply(layer.ln_ff.apply(x));
  }
  for (auto* st : states) ++st->length;
  return final_norm.apply(x);
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct Mlp<float>;
template struct Mlp<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct TransformerLayer<float>;
template struct TransformerLayer<double>;
template struct TransformerStack<float>;
template struct TransformerStack<double>;

}  // namespace hnc::nn
