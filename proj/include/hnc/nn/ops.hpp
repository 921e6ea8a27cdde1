#pragma once

#include <vector>

#include "hnc/nn/tape.hpp"

namespace hnc::nn {

// Packed batch layout: segment s owns rows [offsets[s], offsets[s+1]).
struct Segments {
  std::vector<int> offsets{0};

  static Segments uniform(int count, int length);
  static Segments from_lengths(const std::vector<int>& lengths);
  int count() const { return static_cast<int>(offsets.size()) - 1; }
  int begin(int s) const { return offsets[s]; }
  int length(int s) const { return offsets[s + 1] - offsets[s]; }
  int rows() const { return offsets.back(); }
};

template <class T> Var matmul(Tape<T>& t, Var a, Var b);
template <class T> Var add(Tape<T>& t, Var a, Var b);
template <class T> Var sub(Tape<T>& t, Var a, Var b);
template <class T> Var mul(Tape<T>& t, Var a, Var b);
template <class T> Var scale(Tape<T>& t, Var a, T s);
// a (n x m) plus row vector r (1 x m) on every row.
template <class T> Var add_row(Tape<T>& t, Var a, Var r);
template <class T> Var relu(Tape<T>& t, Var a);
// Per-row normalization with gain and bias (1 x m), eps 1e-5.
template <class T> Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias);
// Inverted dropout; identity when the tape is not training or p == 0.
template <class T> Var dropout(Tape<T>& t, Var a, double p);
// out.row(i) = table.row(index[i]).
template <class T> Var gather_rows(Tape<T>& t, Var table, const std::vector<int>& index);
// Row-major reinterpretation.
template <class T> Var reshape(Tape<T>& t, Var a, int rows, int cols);
template <class T> Var concat_rows(Tape<T>& t, const std::vector<Var>& parts);
template <class T> Var concat_cols(Tape<T>& t, const std::vector<Var>& parts);
// Multiplies row i by mask[i].
template <class T> Var row_scale(Tape<T>& t, Var a, const std::vector<T>& mask);
// Mean of the rows of each segment; one output row per segment.
template <class T> Var segment_mean(Tape<T>& t, Var x, const Segments& segs);
template <class T> Var sum(Tape<T>& t, Var a);
// Forward value q, gradient routed to e unchanged.
template <class T> Var straight_through(Tape<T>& t, Var e, const Matrix<T>& q);

// Multi-head scaled dot-product attention over packed segments. Query
// segment s attends to key segment s; causal masks keys after the query
// position (equal lengths required). Segments without keys output zeros.
template <class T>
Var attention(Tape<T>& t, Var q, Var k, Var v, int heads, const Segments& q_segs,
              const Segments& k_segs, bool causal);

// Losses return 1x1 nodes: sum_i weight[i] * loss_i over rows.
template <class T>
Var squared_emd(Tape<T>& t, Var logits, const std::vector<int>& targets, const std::vector<T>& weights);
template <class T>
Var cross_entropy(Tape<T>& t, Var logits, const std::vector<int>& targets, const std::vector<T>& weights);
// s * sum of squared differences to a constant target.
template <class T> Var squared_distance(Tape<T>& t, Var a, const Matrix<T>& target, T s);

template <class T> Matrix<T> softmax_rows(const Matrix<T>& logits);

}  // namespace hnc::nn
