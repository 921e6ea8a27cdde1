#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "../support/ema_fixture.hpp"
#include "../support/gradcheck.hpp"
#include "doctest.h"
#include "hnc/cad/synthetic.hpp"
#include "hnc/hierarchy/properties.hpp"
#include "hnc/vq/trainer.hpp"

using namespace hnc;
using namespace hnc::vq;
using hierarchy::Level;
using hierarchy::LevelTokens;

namespace {

VqConfig tiny(Level level, int K = 8) {
  VqConfig c = VqConfig::defaults(level);
  c.codebook.size = K;
  c.codebook.dim = 16;
  c.encoder = {16, 32, 2, 0.0, 1, true};
  c.decoder = {16, 32, 2, 0.0, 1, true};
  c.emb_dim = 4;
  return c;
}

LevelTokens loop_tokens(std::vector<int> v) { return {Level::Loop, std::move(v)}; }

std::vector<LevelTokens> sample_loops(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::vector<int>> seen;
  std::vector<LevelTokens> out;
  while (static_cast<int>(out.size()) < n) {
    const auto m = cad::random_model(rng);
    for (const auto& s : m.steps) {
      for (const auto& l : s.loops) {
        auto t = hierarchy::to_tokens(hierarchy::extract_loop_property(l));
        if (static_cast<int>(out.size()) < n && seen.insert(t.values).second) out.push_back(t);
      }
    }
  }
  return out;
}

nn::Matrix<double> mlp_ref(const nn::ParameterSet<double>& ps, const std::string& name, const nn::Matrix<double>& x) {
  nn::Matrix<double> h = x * ps.find(name + ".l1.w")->value;
  h.rowwise() += ps.find(name + ".l1.b")->value.row(0);
  h = h.cwiseMax(0.0);
  nn::Matrix<double> y = h * ps.find(name + ".l2.w")->value;
  y.rowwise() += ps.find(name + ".l2.b")->value.row(0);
  return y;
}

}  // namespace

TEST_CASE("embedding concatenates per-scalar lookups before the shared MLP") {
  VqVae<double> m(tiny(Level::Loop), 3);
  auto& ps = m.params();
  const auto& table = ps.find("emb.table")->value;
  const auto& mask = ps.find("emb.mask")->value;
  const auto& pos = ps.find("emb.pos")->value;
  const auto item = loop_tokens({3, 4, 64, 64, 10, 11});
  nn::Tape<double> t;
  const auto& e = t.value(m.embed(t, {item}, {{0, 0, 1}}));
  REQUIRE(e.rows() == 3);
  REQUIRE(e.cols() == 16);

  nn::Matrix<double> x(3, 8);
  x << table.row(3), table.row(4), table.row(64), table.row(64), mask, mask;
  nn::Matrix<double> expect = mlp_ref(ps, "emb.mlp", x);
  expect += pos.topRows(3);
  CHECK((e - expect).cwiseAbs().maxCoeff() < 1e-12);

  // Fully masked positions differ only by their positional embedding.
  nn::Tape<double> t2;
  const auto& f = t2.value(m.embed(t2, {loop_tokens({1, 2, 5, 6})}, {{1, 1}}));
  CHECK(((f.row(0) - pos.row(0)) - (f.row(1) - pos.row(1))).cwiseAbs().maxCoeff() < 1e-12);

  nn::Tape<double> t3;
  CHECK(t3.value(m.embed(t3, {item}, {{0, 0, 1}})) == e);
}

TEST_CASE("encoder and decoder pass finite differences") {
  std::mt19937_64 rng(5);
  for (Level level : {Level::Loop, Level::Profile, Level::Solid}) {
    VqVae<double> m(tiny(level), 7);
    testing::randomize(m.params(), rng, 0.3);
    const int w = hierarchy::tuple_width(level);
    std::uniform_int_distribution<int> cls(0, 63);
    std::vector<LevelTokens> batch;
    std::vector<std::vector<char>> masks;
    for (int b = 0; b < 2; ++b) {
      LevelTokens item{level, {}};
      for (int i = 0; i < 3 * w; ++i) item.values.push_back(cls(rng));
      if (level == Level::Loop) item.values[2] = item.values[3] = hierarchy::kSepClass;
      batch.push_back(item);
      masks.push_back({1, 0, 1});
    }
    const auto enc = testing::gradcheck(m.params(), {}, [&](nn::Tape<double>& t, const std::vector<nn::Var>&) {
      return testing::weighted_sum(t, m.pooled(t, batch), 1);
    });
    CHECK(enc.max_rel_error < 1e-3);
    // Decoder and reconstruction loss with the code rows as a free input.
    std::vector<int> targets;
    std::vector<double> weights;
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < 3 * w; ++i) {
        targets.push_back(batch[b].values[i]);
        weights.push_back(masks[b][i / w] ? 0.25 : 0.0);
      }
    }
    const auto dec = testing::gradcheck(m.params(), {testing::random_matrix(rng, 2, 16)},
                                        [&](nn::Tape<double>& t, const std::vector<nn::Var>& in) {
                                          const auto logits = m.decode(t, in[0], batch, masks);
                                          return nn::squared_emd(t, logits, targets, weights);
                                        });
    CHECK(dec.max_rel_error < 1e-3);
  }
}

TEST_CASE("encoder gradient is the code gradient plus commitment") {
  VqVae<double> m(tiny(Level::Profile), 8);
  std::mt19937_64 rng(3);
  testing::randomize(m.params(), rng, 0.3);
  const std::vector<LevelTokens> batch{{Level::Profile, {1, 2, 3, 4, 10, 12, 30, 31}}};
  const std::vector<std::vector<char>> masks{{1, 0}};
  nn::Tape<double> t;
  const auto fw = m.forward(t, batch, masks);
  t.backward(fw.loss);
  const auto pooled_grad = t.grad(fw.pooled);

  // Same loss as a function of a free code row c, evaluated at the chosen code.
  nn::Tape<double> t2;
  const auto c = t2.constant(fw.code_vectors, true);
  std::vector<int> targets(batch[0].values.begin(), batch[0].values.end());
  std::vector<double> weights{0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0};
  const auto recon = nn::squared_emd(t2, m.decode(t2, c, batch, masks), targets, weights);
  t2.backward(recon);
  const auto& pv = t.value(fw.pooled);
  const testing::Mat commit_grad = 2 * m.config().beta * (pv - fw.code_vectors);
  CHECK((pooled_grad - (t2.grad(c) + commit_grad)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quantization picks the nearest vector with lowest-index ties") {
  CodebookConfig cfg;
  cfg.size = 5;
  cfg.dim = 3;
  Codebook cb(cfg, 1);
  cb.vectors().setZero();
  for (int i = 0; i < 5; ++i) cb.vectors()(i, 0) = i;
  Eigen::RowVectorXd v(3);
  v << 3, 0, 0;
  CHECK(cb.quantize(v).index == 3);
  CHECK(cb.quantize(v).distance == 0);
  v << 2.5, 0, 0;
  CHECK(cb.quantize(v).index == 2);
  cb.vectors().row(4) = cb.vectors().row(0);
  v << -1, 0, 0;
  CHECK(cb.quantize(v).index == 0);
}

TEST_CASE("straight-through path copies the gradient unchanged") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = testing::random_matrix(rng, 3, 4);
    const auto q = testing::random_matrix(rng, 3, 4);
    const auto w = testing::random_matrix(rng, 4, 2);
    // Numeric gradient of the downstream function at the quantized value.
    auto f = [&](const testing::Mat& x) { return (x * w).array().tanh().sum(); };
    testing::Mat numeric(3, 4);
    testing::Mat probe = q;
    for (Eigen::Index i = 0; i < probe.size(); ++i) {
      const double x0 = probe.data()[i];
      probe.data()[i] = x0 + 1e-6;
      const double up = f(probe);
      probe.data()[i] = x0 - 1e-6;
      const double down = f(probe);
      probe.data()[i] = x0;
      numeric.data()[i] = (up - down) / 2e-6;
    }
    nn::Tape<double> t;
    const auto ev = t.constant(e, true);
    const auto c = nn::straight_through(t, ev, q);
    CHECK(t.value(c) == q);
    t.backward(nn::sum(t, nn::matmul(t, c, t.constant(w))));
    testing::Mat lin = testing::Mat::Ones(3, 2) * w.transpose();
    CHECK((t.grad(ev) - lin).cwiseAbs().maxCoeff() < 1e-12);

    nn::Tape<double> t2;
    const auto ev2 = t2.constant(e, true);
    const auto c2 = nn::straight_through(t2, ev2, q);
    const auto y = t2.record((t2.value(c2) * w).array().tanh().matrix(), {c2},
                             [c2, w](nn::Tape<double>& tp, nn::Var self) {
                               const testing::Mat z = (tp.value(c2) * w).array().tanh().matrix();
                               const testing::Mat g = tp.grad(self).cwiseProduct((1 - z.array().square()).matrix());
                               tp.accumulate(c2, g * w.transpose());
                             });
    t2.backward(nn::sum(t2, y));
    CHECK((t2.grad(ev2) - numeric).norm() / numeric.norm() < 1e-6);
  }
}

TEST_CASE("decoder head emits width x 65 logits per position") {
  for (Level level : {Level::Loop, Level::Solid}) {
    VqVae<double> m(tiny(level), 1);
    const int w = hierarchy::tuple_width(level);
    LevelTokens item{level, std::vector<int>(4 * w, 5)};
    nn::Tape<double> t;
    const auto fw = m.forward(t, {item, item}, {{1, 0, 0, 1}, {0, 1, 0, 0}});
    CHECK(t.value(fw.logits).rows() == 8 * w);
    CHECK(t.value(fw.logits).cols() == hierarchy::kClasses);
    CHECK(fw.masked_slots == 3 * w);
    CHECK(fw.masked_tokens == 3);
  }
  CHECK(hierarchy::tuple_width(Level::Loop) == 2);
  CHECK(hierarchy::tuple_width(Level::Solid) == 6);
}

TEST_CASE("reconstruction ignores unmasked positions and commitment scales with beta") {
  auto cfg = tiny(Level::Loop);
  VqVae<double> m(cfg, 4);
  const std::vector<LevelTokens> batch{loop_tokens({1, 2, 64, 64, 7, 9, 30, 31})};
  const std::vector<std::vector<char>> masks{{0, 1, 1, 0}};
  nn::Tape<double> t;
  const auto fw = m.forward(t, batch, masks);
  t.backward(fw.loss);
  const auto& g = t.grad(fw.logits);
  for (int p : {0, 3}) {
    CHECK(g.row(2 * p).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.row(2 * p + 1).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(g.row(2).cwiseAbs().maxCoeff() > 0.0);

  cfg.beta = 0.5;
  VqVae<double> m2(cfg, 4);
  nn::Tape<double> t2;
  const auto fw2 = m2.forward(t2, batch, masks);
  CHECK(fw2.commitment == doctest::Approx(2 * fw.commitment).epsilon(1e-12));
  CHECK(fw2.reconstruction == doctest::Approx(fw.reconstruction).epsilon(1e-12));
  // Codebook term is reported: ||pooled - c||^2 averaged over the batch.
  CHECK(fw.codebook_term * 0.25 == doctest::Approx(fw.commitment).epsilon(1e-9));
}

TEST_CASE("EMA recurrence matches a hand-computed oracle") {
  CodebookConfig cfg;
  cfg.size = 3;
  cfg.dim = 2;
  Codebook cb(cfg, 9);
  const RowMatrix b0 = cb.vectors();
  // Three updates: code 0 gets {(1,0),(3,0)}, then {(2,2)}, then nothing; code 1 gets (0,4) at step 2.
  const double l = 0.99;
  RowMatrix x1(2, 2), x2(2, 2), x3(1, 2);
  x1 << 1, 0, 3, 0;
  x2 << 2, 2, 0, 4;
  x3 << 5, 5;
  cb.ema_update(x1, {0, 0});
  cb.ema_update(x2, {0, 1});
  cb.ema_update(x3, {1});

  const double n0 = ((1 * l + (1 - l) * 2) * l + (1 - l) * 1) * l;
  const Eigen::RowVector2d m0 = ((b0.row(0) * l + (1 - l) * Eigen::RowVector2d(4, 0)) * l +
                                 (1 - l) * Eigen::RowVector2d(2, 2)) * l;
  const double n1 = ((1 * l) * l + (1 - l)) * l + (1 - l);
  const Eigen::RowVector2d m1 = ((b0.row(1) * l) * l + (1 - l) * Eigen::RowVector2d(0, 4)) * l +
                                (1 - l) * Eigen::RowVector2d(5, 5);
  CHECK(std::abs(cb.ema_count()(0) - n0) < 1e-12);
  CHECK(std::abs(cb.ema_count()(1) - n1) < 1e-12);
  CHECK((cb.ema_sum().row(0) - m0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((cb.vectors().row(0) - m0 / n0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((cb.vectors().row(1) - m1 / n1).cwiseAbs().maxCoeff() < 1e-12);
  // Never-assigned code: N and m decay together, so b is unchanged.
  CHECK((cb.vectors().row(2) - b0.row(2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cb.usage() == std::vector<long>{3, 2, 0});
}

TEST_CASE("EMA limits") {
  CodebookConfig cfg;
  cfg.size = 2500;
  cfg.dim = 3;
  {
    Codebook cb(cfg, 1);
    RowMatrix x(1, 3);
    x << 0.1, -0.05, 0.02;
    for (int i = 0; i < 500; ++i) cb.ema_update(x, {1});
    // The stale mass decays as 0.99^500 ~ 6.6e-3 times the initial gap.
    CHECK((cb.vectors().row(1) - x.row(0)).norm() < 1e-3);
  }
  {
    cfg.decay = 0.0;
    Codebook cb(cfg, 1);
    RowMatrix x(3, 3);
    x << 1, 2, 3, 3, 2, 1, 5, 5, 5;
    std::vector<int> codes{0, 0, 1};
    cb.ema_update(x, codes);
    CHECK((cb.vectors().row(0) - Eigen::RowVector3d(2, 2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((cb.vectors().row(1) - x.row(2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dead codes below the usage threshold are reinitialized") {
  CodebookConfig cfg;
  cfg.size = 3;
  cfg.dim = 2;
  Codebook cb(cfg, 2);
  RowMatrix x = RowMatrix::Zero(13, 2);
  std::vector<int> codes(13, 0);
  for (int i = 7; i < 13; ++i) codes[i] = 1;  // code 0: 7 uses, code 1: 6, code 2: 0
  cb.ema_update(x, codes);
  const RowMatrix kept = cb.vectors();

  std::mt19937_64 rng(1);
  CHECK(cb.reinit_dead(RowMatrix(0, 2), rng).empty());
  CHECK(cb.usage() == std::vector<long>{7, 6, 0});

  RowMatrix pool(1, 2);
  pool << 4, 5;
  CHECK(cb.reinit_dead(pool, rng) == std::vector<int>{1, 2});
  CHECK(cb.vectors().row(0) == kept.row(0));
  CHECK(cb.vectors().row(1) == pool.row(0));
  CHECK(cb.ema_count()(2) == 1.0);
  CHECK(cb.ema_sum().row(2) == pool.row(0));
  CHECK(cb.usage() == std::vector<long>{0, 0, 0});
}

TEST_CASE("EMA codebook converges on four clusters and recycles dead codes") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = testing::make_clusters(seed);
    const auto k4 = testing::run_ema(data, 4, 200, seed);
    CHECK(k4.plane_error < 0.05);
    const auto k8 = testing::run_ema(data, 8, 200, seed);
    CHECK(k8.saw_low_usage);
    CHECK(k8.reinit_events > 0);
    CHECK(k8.first_reset_lowers_error);
    CHECK(k8.final_error < k8.error_before_first_reset);
  }
}

TEST_CASE("encoding is deterministic and survives save and load") {
  VqVae<float> m(tiny(Level::Loop), 11);
  const auto loops = sample_loops(12, 3);
  const auto a = m.encode(loops);
  CHECK(a == m.encode(loops));
  for (int c : a) CHECK((c >= 0 && c < 8));

  const auto dir = std::filesystem::temp_directory_path() / "hnc_test_vq";
  std::filesystem::remove_all(dir);
  m.save(dir);
  CHECK(std::filesystem::exists(dir / "codebook.json"));
  const auto back = VqVae<float>::load(dir);
  CHECK(back.encode(loops) == a);
  CHECK(back.codebook().vectors() == m.codebook().vectors().cast<float>().cast<double>());

  export_clusters(dir / "clusters.jsonl", a, loops);
  std::ifstream in(dir / "clusters.jsonl");
  std::string line;
  int members = 0, prev = -1;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["code"].get<int>() > prev);
    prev = j["code"].get<int>();
    members += static_cast<int>(j["members"].size());
  }
  CHECK(members == 12);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a short training run lowers the loss and is reproducible") {
  const auto loops = sample_loops(8, 4);
  VqTrainConfig tc;
  tc.batch = 8;
  tc.max_steps = 30;
  tc.epochs = 100;
  tc.optimizer.warmup = 5;
  tc.usage_window = 1000;
  VqVae<float> a(tiny(Level::Loop), 1), b(tiny(Level::Loop), 1);
  const auto ra = train_vqvae(a, loops, tc);
  const auto rb = train_vqvae(b, loops, tc);
  REQUIRE(ra.log.size() == 30);
  CHECK(ra.log.back().loss < ra.log.front().loss);
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].loss == rb.log[i].loss);
  CHECK(a.encode(loops) == b.encode(loops));
}
