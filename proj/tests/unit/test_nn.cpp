#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "../support/gradcheck.hpp"
#include "doctest.h"
#include "hnc/nn/checkpoint.hpp"
#include "hnc/nn/layers.hpp"
#include "hnc/nn/ops.hpp"
#include "hnc/nn/optim.hpp"
#include "hnc/nn/sampling.hpp"

using namespace hnc;
using namespace hnc::nn;
using hnc::testing::gradcheck;
using hnc::testing::Mat;
using hnc::testing::random_matrix;
using hnc::testing::weighted_sum;

namespace {

constexpr double kTol = 1e-3;

Segments random_segments(std::mt19937_64& rng, int count, int max_len, bool allow_empty = false) {
  std::uniform_int_distribution<int> len(allow_empty ? 0 : 1, max_len);
  std::vector<int> lengths;
  for (int i = 0; i < count; ++i) lengths.push_back(len(rng));
  return Segments::from_lengths(lengths);
}

}  // namespace

TEST_CASE("elementwise and linear ops pass finite differences") {
  std::mt19937_64 rng(1);
  ParameterSet<double> none;
  for (int trial = 0; trial < 5; ++trial) {
    std::uniform_int_distribution<int> dim(1, 6);
    const int n = dim(rng), m = dim(rng), k = dim(rng);
    auto r = gradcheck(none, {random_matrix(rng, n, m), random_matrix(rng, m, k), random_matrix(rng, 1, k)},
                       [](Tape<double>& t, const std::vector<Var>& in) {
                         const Var y = relu(t, add_row(t, matmul(t, in[0], in[1]), in[2]));
                         return weighted_sum(t, scale(t, y, 1.5), 11);
                       });
    CHECK(r.max_rel_error < kTol);

    r = gradcheck(none, {random_matrix(rng, n, m), random_matrix(rng, 1, m), random_matrix(rng, 1, m)},
                  [](Tape<double>& t, const std::vector<Var>& in) {
                    return weighted_sum(t, layer_norm(t, in[0], in[1], in[2]), 12);
                  });
    CHECK(r.max_rel_error < kTol);

    r = gradcheck(none, {random_matrix(rng, n, m), random_matrix(rng, n, m), random_matrix(rng, 2, m)},
                  [n](Tape<double>& t, const std::vector<Var>& in) {
                    const Var a = sub(t, mul(t, in[0], in[1]), in[0]);
                    const Var b = concat_rows(t, {a, in[2]});
                    const Var c = concat_cols(t, {b, b});
                    std::vector<double> mask(n + 2, 1.0);
                    mask[0] = 0.0;
                    mask[n + 1] = -2.0;
                    return weighted_sum(t, reshape(t, row_scale(t, c, mask), 1, static_cast<int>((n + 2) * 2 * t.value(in[0]).cols())), 13);
                  });
    CHECK(r.max_rel_error < kTol);

    const auto segs = random_segments(rng, 3, 4);
    r = gradcheck(none, {random_matrix(rng, segs.rows(), m), random_matrix(rng, 5, m)},
                  [segs](Tape<double>& t, const std::vector<Var>& in) {
                    const Var g = gather_rows(t, in[1], {4, 0, 4, 2});
                    return add(t, weighted_sum(t, segment_mean(t, in[0], segs), 14), weighted_sum(t, g, 15));
                  });
    CHECK(r.max_rel_error < kTol);
  }
}

TEST_CASE("attention passes finite differences") {
  std::mt19937_64 rng(2);
  ParameterSet<double> none;
  for (int trial = 0; trial < 6; ++trial) {
    const int heads = 1 + trial % 3, dh = 2 + trial % 2, d = heads * dh;
    const bool causal = trial % 2 == 0;
    const auto qs = random_segments(rng, 3, 4);
    const auto ks = causal ? qs : random_segments(rng, 3, 5, true);
    const auto r = gradcheck(none, {random_matrix(rng, qs.rows(), d), random_matrix(rng, ks.rows(), d),
                                    random_matrix(rng, ks.rows(), d)},
                             [&](Tape<double>& t, const std::vector<Var>& in) {
                               return weighted_sum(t, attention(t, in[0], in[1], in[2], heads, qs, ks, causal), 21);
                             });
    CHECK(r.max_rel_error < kTol);
  }
}

TEST_CASE("transformer layers pass finite differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    BlockConfig cfg{8, 12, 2, 0.0, 1, true};
    const bool cross = trial % 2 == 1;
    ParameterSet<double> ps(trial);
    TransformerLayer<double> layer(ps, "l", cfg, cross);
    testing::randomize(ps, rng, 0.4);
    const auto segs = random_segments(rng, 2, 4);
    const auto msegs = random_segments(rng, 2, 3, true);
    const auto r = gradcheck(ps, {random_matrix(rng, segs.rows(), 8), random_matrix(rng, std::max(msegs.rows(), 1), 8)},
                             [&](Tape<double>& t, const std::vector<Var>& in) {
                               if (!cross) return weighted_sum(t, layer.forward(t, in[0], segs, true, nullptr), 31);
                               Var mem = in[1];
                               Segments ms = msegs;
                               if (msegs.rows() == 0) ms = Segments::from_lengths({0, 1});
                               const Memory<double> memory{mem, ms};
                               return weighted_sum(t, layer.forward(t, in[0], segs, false, &memory), 32);
                             });
    CHECK(r.max_rel_error < kTol);
  }
}

TEST_CASE("losses pass finite differences") {
  std::mt19937_64 rng(4);
  ParameterSet<double> none;
  for (int trial = 0; trial < 5; ++trial) {
    std::uniform_int_distribution<int> cls(0, 6);
    std::vector<int> targets{cls(rng), cls(rng), cls(rng)};
    std::vector<double> w{1.0, 0.5, 0.0};
    auto r = gradcheck(none, {random_matrix(rng, 3, 7)}, [&](Tape<double>& t, const std::vector<Var>& in) {
      return add(t, squared_emd(t, in[0], targets, w), cross_entropy(t, in[0], targets, w));
    });
    CHECK(r.max_rel_error < kTol);
    const Mat target = random_matrix(rng, 2, 3);
    r = gradcheck(none, {random_matrix(rng, 2, 3)}, [&](Tape<double>& t, const std::vector<Var>& in) {
      return squared_distance(t, in[0], target, 0.25);
    });
    CHECK(r.max_rel_error < kTol);
  }
}

TEST_CASE("zero output projections give the identity") {
  BlockConfig cfg{8, 16, 2, 0.0, 1, true};
  ParameterSet<double> ps(5);
  TransformerLayer<double> layer(ps, "l", cfg, false);
  std::mt19937_64 rng(5);
  testing::randomize(ps, rng);
  for (auto* p : {layer.sa.wo.w, layer.sa.wo.b, layer.ff.l2.w, layer.ff.l2.b}) p->value.setZero();
  Tape<double> t;
  const Mat x = random_matrix(rng, 5, 8);
  const Var y = layer.forward(t, t.constant(x), Segments::uniform(1, 5), true, nullptr);
  CHECK((t.value(y) - x).norm() == 0.0);
}

TEST_CASE("causal mask hides later positions") {
  BlockConfig cfg{8, 16, 2, 0.0, 2, true};
  ParameterSet<double> ps(6);
  TransformerStack<double> stack(ps, "s", cfg, false);
  std::mt19937_64 rng(6);
  testing::randomize(ps, rng, 0.3);
  Mat x = random_matrix(rng, 6, 8);
  Tape<double> t1;
  const Mat y1 = t1.value(stack.forward(t1, t1.constant(x), Segments::uniform(1, 6), true));
  x.row(4) += random_matrix(rng, 1, 8);
  Tape<double> t2;
  const Mat y2 = t2.value(stack.forward(t2, t2.constant(x), Segments::uniform(1, 6), true));
  CHECK((y1.topRows(4) - y2.topRows(4)).norm() == 0.0);
  CHECK((y1.row(4) - y2.row(4)).norm() > 1e-6);
}

TEST_CASE("cross-attention over memory") {
  std::mt19937_64 rng(7);
  Tape<double> t;
  const Mat q = random_matrix(rng, 3, 4), k = random_matrix(rng, 1, 4), v = random_matrix(rng, 1, 4);
  const Mat out = t.value(attention(t, t.constant(q), t.constant(k), t.constant(v), 2, Segments::uniform(1, 3),
                                    Segments::uniform(1, 1), false));
  for (int i = 0; i < 3; ++i) CHECK((out.row(i) - v.row(0)).norm() < 1e-15);

  const Mat k5 = random_matrix(rng, 5, 4), v5 = random_matrix(rng, 5, 4);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  Mat kp(5, 4), vp(5, 4);
  for (int i = 0; i < 5; ++i) {
    kp.row(i) = k5.row(perm[i]);
    vp.row(i) = v5.row(perm[i]);
  }
  const Mat a = t.value(attention(t, t.constant(q), t.constant(k5), t.constant(v5), 2, Segments::uniform(1, 3),
                                  Segments::uniform(1, 5), false));
  const Mat b = t.value(attention(t, t.constant(q), t.constant(kp), t.constant(vp), 2, Segments::uniform(1, 3),
                                  Segments::uniform(1, 5), false));
  CHECK((a - b).norm() < 1e-12);

  const Mat p = softmax_rows<double>(random_matrix(rng, 10, 7, 3.0));
  for (int i = 0; i < 10; ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-6);
}

TEST_CASE("incremental decoding matches the full causal forward") {
  BlockConfig cfg{16, 32, 4, 0.0, 3, true};
  ParameterSet<double> ps(8);
  TransformerStack<double> stack(ps, "s", cfg, true);
  std::mt19937_64 rng(8);
  testing::randomize(ps, rng, 0.3);
  const Mat x = random_matrix(rng, 7, 16);
  const Mat mem = random_matrix(rng, 4, 16);
  for (bool with_memory : {true, false}) {
    Tape<double> t;
    const Memory<double> memory{t.constant(with_memory ? mem : Mat(0, 16)),
                                Segments::from_lengths({with_memory ? 4 : 0})};
    const Mat full = t.value(stack.forward(t, t.constant(x), Segments::uniform(1, 7), true, &memory));
    auto st = stack.start(with_memory ? mem : Mat(0, 16), 10);
    for (int i = 0; i < 7; ++i) {
      const Mat y = stack.step(x.row(i), {&st});
      CHECK((y.row(0) - full.row(i)).norm() < 1e-10);
    }
  }
}

TEST_CASE("squared EMD loss values") {
  Tape<double> t;
  auto emd = [&](const std::vector<double>& logits, int target) {
    Mat z(1, static_cast<int>(logits.size()));
    for (std::size_t i = 0; i < logits.size(); ++i) z(0, i) = logits[i];
    return t.value(squared_emd(t, t.constant(z), {target}, {1.0}))(0, 0);
  };
  const double big = 200;
  for (int j = 0; j < 65; j += 7) {
    for (int k = 0; k < 65; k += 5) {
      std::vector<double> logits(65, -big);
      logits[j] = big;
      CHECK(emd(logits, k) == doctest::Approx(std::abs(j - k)).epsilon(1e-12));
    }
  }
  // Moving mass one bin away from the target never lowers the loss.
  for (int target = 0; target < 3; ++target) {
    for (int a = 0; a <= 20; ++a) {
      for (int b = 0; a + b <= 20; ++b) {
        const double p[3] = {a / 20.0, b / 20.0, (20 - a - b) / 20.0};
        auto loss = [&](const double* q) {
          double c = 0, l = 0;
          for (int i = 0; i < 3; ++i) {
            c += q[i];
            l += (c - (i >= target ? 1 : 0)) * (c - (i >= target ? 1 : 0));
          }
          return l;
        };
        for (int from = 0; from < 3; ++from) {
          const int to = from < target ? from - 1 : from + 1;
          if (from == target || to < 0 || to > 2 || p[from] == 0) continue;
          double q[3] = {p[0], p[1], p[2]};
          q[from] -= 0.05;
          q[to] += 0.05;
          CHECK(loss(q) >= loss(p) - 1e-15);
        }
      }
    }
  }
}

TEST_CASE("cross entropy values") {
  Tape<double> t;
  const Var z = t.constant(Mat::Zero(2, 65));
  CHECK(t.value(cross_entropy(t, z, {3, 64}, {0.5, 0.5}))(0, 0) == doctest::Approx(std::log(65.0)));
  Mat peaked = Mat::Constant(1, 5, -100);
  peaked(0, 2) = 100;
  CHECK(t.value(cross_entropy(t, t.constant(peaked), {2}, {1.0}))(0, 0) < 1e-12);
}

TEST_CASE("AdamW") {
  AdamWConfig cfg;
  CHECK(warmup_lr(cfg, 1000) == doctest::Approx(0.0005));
  CHECK(warmup_lr(cfg, 2000) == doctest::Approx(0.001));
  CHECK(warmup_lr(cfg, 9000) == doctest::Approx(0.001));

  ParameterSet<double> ps(1);
  auto& w = ps.add("w", 2, 3, Init::Normal, true);
  const Mat before = w.value;
  AdamWConfig still = cfg;
  still.weight_decay = 0;
  AdamW<double> opt(ps, still);
  for (int i = 0; i < 10; ++i) opt.step();
  CHECK(w.value == before);

  // Quadratic bowl centred at c.
  ParameterSet<double> bowl;
  auto& x = bowl.add("x", 1, 4, Init::Zeros, false);
  Mat c(1, 4);
  c << 0.3, -0.7, 1.2, 0.05;
  AdamWConfig fast;
  fast.lr = 0.01;
  fast.warmup = 100;
  AdamW<double> o2(bowl, fast);
  for (int i = 0; i < 5000; ++i) {
    bowl.zero_grad();
    x.grad = 2 * (x.value - c);
    o2.step();
  }
  CHECK((x.value - c).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("nucleus sampling") {
  const std::vector<double> probs{0.5, 0.3, 0.15, 0.05};
  const auto s = nucleus_support(probs, 0.8);
  REQUIRE(s.size() == 2);
  CHECK(s[0].first == 0);
  CHECK(s[0].second == doctest::Approx(0.625));
  CHECK(s[1].first == 1);
  CHECK(s[1].second == doctest::Approx(0.375));
  CHECK(nucleus_support(probs, 1.0).size() == 4);
  CHECK(nucleus_support(probs, 1e-9).size() == 1);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) CHECK(nucleus_sample(probs, 1e-9, rng) == 0);
  CHECK(nucleus_support({0.25, 0.25, 0.5}, 0.6)[1].first == 0);
  const auto p = masked_softmax({1.0, 5.0, 2.0}, {true, false, true});
  CHECK(p[1] == 0.0);
  CHECK(p[0] + p[2] == doctest::Approx(1.0));
  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 50; ++i) CHECK(nucleus_sample(probs, 0.9, a) == nucleus_sample(probs, 0.9, b));
}

TEST_CASE("checkpoint round trip") {
  ParameterSet<float> ps(3);
  Linear<float> lin(ps, "lin", 4, 5);
  LayerNorm<float> ln(ps, "ln", 5);
  const auto path = std::filesystem::temp_directory_path() / "hnc_test.ckpt";
  save_checkpoint(path, ps, {{"hello", 1}});
  ParameterSet<float> other(99);
  Linear<float> lin2(other, "lin", 4, 5);
  LayerNorm<float> ln2(other, "ln", 5);
  CHECK(load_checkpoint(path, other)["hello"] == 1);
  CHECK(lin2.w->value == lin.w->value);
  ParameterSet<float> wrong;
  Linear<float> lin3(wrong, "lin", 4, 6);
  CHECK_THROWS_AS(load_checkpoint(path, wrong), std::runtime_error);
  CHECK(read_checkpoint_header(path)["params"].size() == 4);
  std::filesystem::remove(path);
}

TEST_CASE("training is deterministic under a fixed seed") {
  auto run = [] {
    BlockConfig cfg{16, 32, 4, 0.1, 2, true};
    ParameterSet<float> ps(42);
    TransformerStack<float> stack(ps, "s", cfg, false);
    Linear<float> head(ps, "head", 16, 5);
    AdamW<float> opt(ps, AdamWConfig{});
    std::mt19937_64 rng(1);
    Matrix<float> x = random_matrix(rng, 6, 16).cast<float>();
    for (int step = 0; step < 5; ++step) {
      Tape<float> t(true, step);
      ps.zero_grad();
      const Var logits = head(t, stack.forward(t, t.constant(x), Segments::uniform(2, 3), true));
      t.backward(cross_entropy(t, logits, {0, 1, 2, 3, 4, 0}, std::vector<float>(6, 1.0f)));
      opt.step();
    }
    return head.w->value;
  };
  CHECK(run() == run());
}
