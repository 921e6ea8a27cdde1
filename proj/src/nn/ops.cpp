#include "hnc/nn/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>

namespace hnc::nn {

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw std::invalid_argument(fmt::format("{}: {}", op, what));
}

template <class T>
std::string shape(const Matrix<T>& m) {
  return fmt::format("{}x{}", m.rows(), m.cols());
}

}  // namespace

Segments Segments::uniform(int count, int length) {
  Segments s;
  for (int i = 0; i < count; ++i) s.offsets.push_back(s.offsets.back() + length);
  return s;
}

Segments Segments::from_lengths(const std::vector<int>& lengths) {
  Segments s;
  for (int l : lengths) s.offsets.push_back(s.offsets.back() + l);
  return s;
}

template <class T>
Var matmul(Tape<T>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require(A.cols() == B.rows(), "matmul", shape(A) + " * " + shape(B));
  Matrix<T> out = A * B;
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

template <class T>
Var add(Tape<T>& t, Var a, Var b) {
  require(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "add",
          shape(t.value(a)) + " + " + shape(t.value(b)));
  Matrix<T> out = t.value(a) + t.value(b);
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    t.accumulate(a, t.grad(self));
    t.accumulate(b, t.grad(self));
  });
}

template <class T>
Var sub(Tape<T>& t, Var a, Var b) {
  require(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "sub",
          shape(t.value(a)) + " - " + shape(t.value(b)));
  Matrix<T> out = t.value(a) - t.value(b);
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    t.accumulate(a, t.grad(self));
    t.accumulate(b, -t.grad(self));
  });
}

template <class T>
Var mul(Tape<T>& t, Var a, Var b) {
  require(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "mul",
          shape(t.value(a)) + " .* " + shape(t.value(b)));
  Matrix<T> out = t.value(a).cwiseProduct(t.value(b));
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    t.accumulate(a, t.grad(self).cwiseProduct(t.value(b)));
    t.accumulate(b, t.grad(self).cwiseProduct(t.value(a)));
  });
}

template <class T>
Var scale(Tape<T>& t, Var a, T s) {
  Matrix<T> out = t.value(a) * s;
  return t.record(std::move(out), {a}, [a, s](Tape<T>& t, Var self) { t.accumulate(a, t.grad(self) * s); });
}

template <class T>
Var add_row(Tape<T>& t, Var a, Var r) {
  const auto& A = t.value(a);
  const auto& R = t.value(r);
  require(R.rows() == 1 && R.cols() == A.cols(), "add_row", shape(A) + " + " + shape(R));
  Matrix<T> out = A.rowwise() + R.row(0);
  return t.record(std::move(out), {a, r}, [a, r](Tape<T>& t, Var self) {
    t.accumulate(a, t.grad(self));
    if (t.needs_grad(r)) t.accumulate(r, t.grad(self).colwise().sum());
  });
}

template <class T>
Var relu(Tape<T>& t, Var a) {
  Matrix<T> out = t.value(a).cwiseMax(T(0));
  return t.record(std::move(out), {a}, [a](Tape<T>& t, Var self) {
    t.accumulate(a, (t.value(a).array() > T(0)).select(t.grad(self), T(0)));
  });
}

template <class T>
Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias) {
  const auto& X = t.value(x);
  const auto& G = t.value(gain);
  const auto& B = t.value(bias);
  require(G.rows() == 1 && G.cols() == X.cols() && B.cols() == X.cols(), "layer_norm", shape(X));
  const T eps = T(1e-5);
  const Eigen::Index n = X.rows(), m = X.cols();
  auto xhat = std::make_shared<Matrix<T>>(n, m);
  auto inv = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = X.row(i).mean();
    const T var = (X.row(i).array() - mean).square().mean();
    (*inv)(i) = T(1) / std::sqrt(var + eps);
    xhat->row(i) = (X.row(i).array() - mean) * (*inv)(i);
  }
  Matrix<T> out = (xhat->array().rowwise() * G.row(0).array()).rowwise() + B.row(0).array();
  return t.record(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv](Tape<T>& t, Var self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(gain)) t.accumulate(gain, g.cwiseProduct(*xhat).colwise().sum());
    if (t.needs_grad(bias)) t.accumulate(bias, g.colwise().sum());
    if (t.needs_grad(x)) {
      const auto& G = t.value(gain);
      Matrix<T> dxhat = g.array().rowwise() * G.row(0).array();
      const T m = static_cast<T>(dxhat.cols());
      Matrix<T> dx(dxhat.rows(), dxhat.cols());
      for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
        const T mean_d = dxhat.row(i).sum() / m;
        const T mean_dx = dxhat.row(i).dot(xhat->row(i)) / m;
        dx.row(i) = (*inv)(i) * (dxhat.row(i).array() - mean_d - xhat->row(i).array() * mean_dx);
      }
      t.accumulate(x, dx);
    }
  });
}

template <class T>
Var dropout(Tape<T>& t, Var a, double p) {
  if (!t.training() || p <= 0.0) return a;
  const auto& A = t.value(a);
  auto mask = std::make_shared<Matrix<T>>(A.rows(), A.cols());
  std::bernoulli_distribution keep(1.0 - p);
  const T s = static_cast<T>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < mask->size(); ++i) mask->data()[i] = keep(t.rng()) ? s : T(0);
  Matrix<T> out = A.cwiseProduct(*mask);
  return t.record(std::move(out), {a}, [a, mask](Tape<T>& t, Var self) {
    t.accumulate(a, t.grad(self).cwiseProduct(*mask));
  });
}

template <class T>
Var gather_rows(Tape<T>& t, Var table, const std::vector<int>& index) {
  const auto& W = t.value(table);
  Matrix<T> out(static_cast<Eigen::Index>(index.size()), W.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && index[i] < W.rows(), "gather_rows", fmt::format("row {} of {}", index[i], W.rows()));
    out.row(i) = W.row(index[i]);
  }
  return t.record(std::move(out), {table}, [table, index](Tape<T>& t, Var self) {
    const auto& g = t.grad(self);
    Matrix<T> d = Matrix<T>::Zero(t.value(table).rows(), t.value(table).cols());
    for (std::size_t i = 0; i < index.size(); ++i) d.row(index[i]) += g.row(i);
    t.accumulate(table, d);
  });
}

template <class T>
Var reshape(Tape<T>& t, Var a, int rows, int cols) {
  const auto& A = t.value(a);
  require(static_cast<Eigen::Index>(rows) * cols == A.size(), "reshape", shape(A));
  Matrix<T> out = Eigen::Map<const Matrix<T>>(A.data(), rows, cols);
  const int r0 = static_cast<int>(A.rows()), c0 = static_cast<int>(A.cols());
  return t.record(std::move(out), {a}, [a, r0, c0](Tape<T>& t, Var self) {
    t.accumulate(a, Eigen::Map<const Matrix<T>>(t.grad(self).data(), r0, c0));
  });
}

template <class T>
Var concat_rows(Tape<T>& t, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = t.value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    require(t.value(p).cols() == cols, "concat_rows", shape(t.value(p)));
    rows += t.value(p).rows();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, t.value(p).rows()) = t.value(p);
    r += t.value(p).rows();
  }
  return t.record(std::move(out), parts, [parts](Tape<T>& t, Var self) {
    Eigen::Index r = 0;
    for (Var p : parts) {
      const Eigen::Index n = t.value(p).rows();
      if (t.needs_grad(p)) t.accumulate(p, t.grad(self).middleRows(r, n));
      r += n;
    }
  });
}

template <class T>
Var concat_cols(Tape<T>& t, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "concat_cols", shape(t.value(p)));
    cols += t.value(p).cols();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, t.value(p).cols()) = t.value(p);
    c += t.value(p).cols();
  }
  return t.record(std::move(out), parts, [parts](Tape<T>& t, Var self) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      const Eigen::Index n = t.value(p).cols();
      if (t.needs_grad(p)) t.accumulate(p, t.grad(self).middleCols(c, n));
      c += n;
    }
  });
}

template <class T>
Var row_scale(Tape<T>& t, Var a, const std::vector<T>& mask) {
  const auto& A = t.value(a);
  require(static_cast<Eigen::Index>(mask.size()) == A.rows(), "row_scale", shape(A));
  const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> m(mask.data(), mask.size());
  Matrix<T> out = A.array().colwise() * m.array();
  return t.record(std::move(out), {a}, [a, mask](Tape<T>& t, Var self) {
    const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> m(mask.data(), mask.size());
    t.accumulate(a, (t.grad(self).array().colwise() * m.array()).matrix());
  });
}

template <class T>
Var segment_mean(Tape<T>& t, Var x, const Segments& segs) {
  const auto& X = t.value(x);
  require(segs.rows() == X.rows(), "segment_mean", shape(X));
  Matrix<T> out(segs.count(), X.cols());
  for (int s = 0; s < segs.count(); ++s) {
    require(segs.length(s) > 0, "segment_mean", "empty segment");
    out.row(s) = X.middleRows(segs.begin(s), segs.length(s)).colwise().mean();
  }
  return t.record(std::move(out), {x}, [x, segs](Tape<T>& t, Var self) {
    const auto& g = t.grad(self);
    Matrix<T> d(segs.rows(), g.cols());
    for (int s = 0; s < segs.count(); ++s) {
      const T inv = T(1) / static_cast<T>(segs.length(s));
      for (int r = 0; r < segs.length(s); ++r) d.row(segs.begin(s) + r) = g.row(s) * inv;
    }
    t.accumulate(x, d);
  });
}

template <class T>
Var sum(Tape<T>& t, Var a) {
  Matrix<T> out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.record(std::move(out), {a}, [a](Tape<T>& t, Var self) {
    const auto& A = t.value(a);
    t.accumulate(a, Matrix<T>::Constant(A.rows(), A.cols(), t.grad(self)(0, 0)));
  });
}

template <class T>
Var straight_through(Tape<T>& t, Var e, const Matrix<T>& q) {
  require(q.rows() == t.value(e).rows() && q.cols() == t.value(e).cols(), "straight_through", shape(q));
  return t.record(q, {e}, [e](Tape<T>& t, Var self) { t.accumulate(e, t.grad(self)); });
}

template <class T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T mx = logits.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      p.row(i).setConstant(T(1) / static_cast<T>(logits.cols()));
      continue;
    }
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

template <class T>
Var attention(Tape<T>& t, Var q, Var k, Var v, int heads, const Segments& qs, const Segments& ks,
              bool causal) {
  const auto& Q = t.value(q);
  const auto& K = t.value(k);
  const auto& V = t.value(v);
  require(Q.cols() == K.cols() && K.cols() == V.cols() && K.rows() == V.rows(), "attention",
          shape(Q) + ", " + shape(K) + ", " + shape(V));
  require(heads > 0 && Q.cols() % heads == 0, "attention", "d_model not divisible by heads");
  require(qs.rows() == Q.rows() && ks.rows() == K.rows() && qs.count() == ks.count(), "attention",
          "segment layout does not match inputs");
  const int dh = static_cast<int>(Q.cols()) / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(dh));
  // Attention weights per (segment, head).
  auto probs = std::make_shared<std::vector<Matrix<T>>>(static_cast<std::size_t>(qs.count()) * heads);
  Matrix<T> out = Matrix<T>::Zero(Q.rows(), Q.cols());
  for (int s = 0; s < qs.count(); ++s) {
    const int lq = qs.length(s), lk = ks.length(s);
    if (lq == 0 || lk == 0) continue;
    require(!causal || lq == lk, "attention", "causal attention needs equal lengths");
    for (int h = 0; h < heads; ++h) {
      Matrix<T> sco = (Q.block(qs.begin(s), h * dh, lq, dh) * K.block(ks.begin(s), h * dh, lk, dh).transpose()) * sc;
      if (causal) {
        for (int i = 0; i < lq; ++i)
          for (int j = i + 1; j < lk; ++j) sco(i, j) = -std::numeric_limits<T>::infinity();
      }
      Matrix<T> p = softmax_rows<T>(sco);
      out.block(qs.begin(s), h * dh, lq, dh) = p * V.block(ks.begin(s), h * dh, lk, dh);
      (*probs)[static_cast<std::size_t>(s) * heads + h] = std::move(p);
    }
  }
  return t.record(std::move(out), {q, k, v}, [q, k, v, heads, qs, ks, dh, sc, probs](Tape<T>& t, Var self) {
    const auto& G = t.grad(self);
    const auto& Q = t.value(q);
    const auto& K = t.value(k);
    const auto& V = t.value(v);
    Matrix<T> dq = Matrix<T>::Zero(Q.rows(), Q.cols());
    Matrix<T> dk = Matrix<T>::Zero(K.rows(), K.cols());
    Matrix<T> dv = Matrix<T>::Zero(V.rows(), V.cols());
    for (int s = 0; s < qs.count(); ++s) {
      const int lq = qs.length(s), lk = ks.length(s);
      if (lq == 0 || lk == 0) continue;
      for (int h = 0; h < heads; ++h) {
        const auto& p = (*probs)[static_cast<std::size_t>(s) * heads + h];
        const auto g = G.block(qs.begin(s), h * dh, lq, dh);
        dv.block(ks.begin(s), h * dh, lk, dh).noalias() += p.transpose() * g;
        Matrix<T> dp = g * V.block(ks.begin(s), h * dh, lk, dh).transpose();
        const Eigen::Matrix<T, Eigen::Dynamic, 1> rowdot = dp.cwiseProduct(p).rowwise().sum();
        Matrix<T> dsc = (p.array() * (dp.array().colwise() - rowdot.array())).matrix() * sc;
        dq.block(qs.begin(s), h * dh, lq, dh).noalias() += dsc * K.block(ks.begin(s), h * dh, lk, dh);
        dk.block(ks.begin(s), h * dh, lk, dh).noalias() += dsc.transpose() * Q.block(qs.begin(s), h * dh, lq, dh);
      }
    }
    t.accumulate(q, dq);
    t.accumulate(k, dk);
    t.accumulate(v, dv);
  });
}

template <class T>
Var squared_emd(Tape<T>& t, Var logits, const std::vector<int>& targets, const std::vector<T>& weights) {
  const auto& Z = t.value(logits);
  require(static_cast<Eigen::Index>(targets.size()) == Z.rows() && weights.size() == targets.size(),
          "squared_emd", shape(Z));
  const int kc = static_cast<int>(Z.cols());
  auto p = std::make_shared<Matrix<T>>(softmax_rows<T>(Z));
  Matrix<T> out = Matrix<T>::Zero(1, 1);
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    if (weights[i] == T(0)) continue;
    require(targets[i] >= 0 && targets[i] < kc, "squared_emd", "target out of range");
    T cdf = 0, loss = 0;
    for (int c = 0; c < kc; ++c) {
      cdf += (*p)(i, c);
      const T d = cdf - (c >= targets[i] ? T(1) : T(0));
      loss += d * d;
    }
    out(0, 0) += weights[i] * loss;
  }
  return t.record(std::move(out), {logits}, [logits, targets, weights, p, kc](Tape<T>& t, Var self) {
    const T g0 = t.grad(self)(0, 0);
    Matrix<T> dz = Matrix<T>::Zero(p->rows(), p->cols());
    std::vector<T> dc(kc);
    for (Eigen::Index i = 0; i < p->rows(); ++i) {
      if (weights[i] == T(0)) continue;
      T cdf = 0;
      for (int c = 0; c < kc; ++c) {
        cdf += (*p)(i, c);
        dc[c] = T(2) * (cdf - (c >= targets[i] ? T(1) : T(0)));
      }
      // dL/dp_j = sum_{c >= j} dL/dC_c
      T suffix = 0;
      Eigen::Matrix<T, 1, Eigen::Dynamic> dp(kc);
      for (int c = kc - 1; c >= 0; --c) {
        suffix += dc[c];
        dp(c) = suffix;
      }
      const T inner = dp.dot(p->row(i));
      dz.row(i) = g0 * weights[i] * (p->row(i).array() * (dp.array() - inner));
    }
    t.accumulate(logits, dz);
  });
}

template <class T>
Var cross_entropy(Tape<T>& t, Var logits, const std::vector<int>& targets, const std::vector<T>& weights) {
  const auto& Z = t.value(logits);
  require(static_cast<Eigen::Index>(targets.size()) == Z.rows() && weights.size() == targets.size(),
          "cross_entropy", shape(Z));
  auto p = std::make_shared<Matrix<T>>(softmax_rows<T>(Z));
  Matrix<T> out = Matrix<T>::Zero(1, 1);
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    if (weights[i] == T(0)) continue;
    require(targets[i] >= 0 && targets[i] < Z.cols(), "cross_entropy", "target out of range");
    const T mx = Z.row(i).maxCoeff();
    const T lse = mx + std::log((Z.row(i).array() - mx).exp().sum());
    out(0, 0) += weights[i] * (lse - Z(i, targets[i]));
  }
  return t.record(std::move(out), {logits}, [logits, targets, weights, p](Tape<T>& t, Var self) {
    const T g0 = t.grad(self)(0, 0);
    Matrix<T> dz = *p;
    for (Eigen::Index i = 0; i < dz.rows(); ++i) {
      if (weights[i] == T(0)) {
        dz.row(i).setZero();
        continue;
      }
      dz(i, targets[i]) -= T(1);
      dz.row(i) *= g0 * weights[i];
    }
    t.accumulate(logits, dz);
  });
}

template <class T>
Var squared_distance(Tape<T>& t, Var a, const Matrix<T>& target, T s) {
  const auto& A = t.value(a);
  require(A.rows() == target.rows() && A.cols() == target.cols(), "squared_distance", shape(A));
  Matrix<T> out(1, 1);
  out(0, 0) = s * (A - target).squaredNorm();
  return t.record(std::move(out), {a}, [a, target, s](Tape<T>& t, Var self) {
    t.accumulate(a, (t.value(a) - target) * (T(2) * s * t.grad(self)(0, 0)));
  });
}

#define HNC_INSTANTIATE_OPS(T)                                                                      \
  template Var matmul<T>(Tape<T>&, Var, Var);                                                       \
  template Var add<T>(Tape<T>&, Var, Var);                                                          \
  template Var sub<T>(Tape<T>&, Var, Var);                                                          \
  template Var mul<T>(Tape<T>&, Var, Var);                                                          \
  template Var scale<T>(Tape<T>&, Var, T);                                                          \
  template Var add_row<T>(Tape<T>&, Var, Var);                                                      \
  template Var relu<T>(Tape<T>&, Var);                                                              \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var);                                              \
  template Var dropout<T>(Tape<T>&, Var, double);                                                   \
  template Var gather_rows<T>(Tape<T>&, Var, const std::vector<int>&);                              \
  template Var reshape<T>(Tape<T>&, Var, int, int);                                                 \
  template Var concat_rows<T>(Tape<T>&, const std::vector<Var>&);                                   \
  template Var concat_cols<T>(Tape<T>&, const std::vector<Var>&);                                   \
  template Var row_scale<T>(Tape<T>&, Var, const std::vector<T>&);                                  \
  template Var segment_mean<T>(Tape<T>&, Var, const Segments&);                                     \
  template Var sum<T>(Tape<T>&, Var);                                                               \
  template Var straight_through<T>(Tape<T>&, Var, const Matrix<T>&);                                \
  template Var attention<T>(Tape<T>&, Var, Var, Var, int, const Segments&, const Segments&, bool);  \
  template Var squared_emd<T>(Tape<T>&, Var, const std::vector<int>&, const std::vector<T>&);       \
  template Var cross_entropy<T>(Tape<T>&, Var, const std::vector<int>&, const std::vector<T>&);     \
  template Var squared_distance<T>(Tape<T>&, Var, const Matrix<T>&, T);                             \
  template Matrix<T> softmax_rows<T>(const Matrix<T>&);

HNC_INSTANTIATE_OPS(float)
HNC_INSTANTIATE_OPS(double)

}  // namespace hnc::nn
