#include "hnc/vq/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "hnc/hierarchy/dataset.hpp"

namespace hnc::vq {

using nlohmann::json;

json VqTrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"max_steps", max_steps},
          {"batch", batch},
          {"optimizer", optimizer.to_json()},
          {"augment", augment},
          {"shift_probability", augment_options.shift_probability},
          {"usage_window", usage_window},
          {"pool_size", pool_size},
          {"seed", seed}};
}

VqTrainConfig VqTrainConfig::from_json(const json& j) {
  VqTrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.batch = j.value("batch", c.batch);
  if (j.contains("optimizer")) c.optimizer = nn::AdamWConfig::from_json(j["optimizer"]);
  c.augment = j.value("augment", c.augment);
  c.augment_options.shift_probability = j.value("shift_probability", c.augment_options.shift_probability);
  c.usage_window = j.value("usage_window", c.usage_window);
  c.pool_size = j.value("pool_size", c.pool_size);
  c.seed = j.value("seed", c.seed);
  return c;
}

VqTrainResult train_vqvae(VqVae<float>& model, const std::vector<LevelTokens>& data, const VqTrainConfig& cfg,
                          const std::function<void(const VqStepLog&)>& on_step) {
  VqTrainResult result;
  if (data.empty()) return result;
  nn::AdamW<float> opt(model.params(), cfg.optimizer);
  const auto& vc = model.config();
  const int batch = std::max(1, std::min<int>(cfg.batch, static_cast<int>(data.size())));
  const int d = vc.encoder.d_model;
  RowMatrix pool(0, d);
  std::vector<RowMatrix> recent;
  int recent_rows = 0;
  long step = 0;
  int since_check = 0;
  std::mt19937_64 reinit_rng(cfg.seed ^ 0x5bd1e995ULL);

  auto check_dead = [&] {
    RowMatrix p(recent_rows, d);
    int r = 0;
    for (const auto& m : recent) {
      p.middleRows(r, m.rows()) = m;
      r += static_cast<int>(m.rows());
    }
    const auto reset = model.codebook().reinit_dead(p, reinit_rng);
    result.reinitialized_total += static_cast<int>(reset.size());
    since_check = 0;
    return static_cast<int>(reset.size());
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1));
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start + batch <= order.size() || start == 0; start += batch) {
      std::vector<LevelTokens> items;
      std::vector<std::vector<char>> masks;
      for (std::size_t i = start; i < std::min(order.size(), start + batch); ++i) {
        items.push_back(cfg.augment ? hierarchy::augment(data[order[i]], rng, cfg.augment_options) : data[order[i]]);
        masks.push_back(sample_mask(items.back().length(), vc.mask_min, vc.mask_max, rng));
      }
      nn::Tape<float> tape(true, cfg.seed ^ static_cast<std::uint64_t>(step + 1));
      model.params().zero_grad();
      const auto fw = model.forward(tape, items, masks);
      tape.backward(fw.loss);
      opt.step();
      ++step;

      const RowMatrix pooled = tape.value(fw.pooled).cast<double>();
      model.codebook().ema_update(pooled, fw.codes);
      recent.push_back(pooled);
      recent_rows += static_cast<int>(pooled.rows());
      while (recent_rows - recent.front().rows() >= cfg.pool_size && recent.size() > 1) {
        recent_rows -= static_cast<int>(recent.front().rows());
        recent.erase(recent.begin());
      }

      VqStepLog log;
      log.step = step;
      log.epoch = epoch;
      log.loss = static_cast<double>(tape.value(fw.loss)(0, 0));
      log.reconstruction = fw.reconstruction;
      log.commitment = fw.commitment;
      log.codebook_term = fw.codebook_term;
      log.slot_accuracy = fw.masked_slots ? double(fw.correct_slots) / fw.masked_slots : 0;
      log.token_accuracy = fw.masked_tokens ? double(fw.correct_tokens) / fw.masked_tokens : 0;
      ++since_check;
      if (cfg.usage_window > 0 && since_check >= cfg.usage_window) log.reinitialized = check_dead();
      result.log.push_back(log);
      if (on_step) on_step(log);
      if (cfg.max_steps > 0 && step >= cfg.max_steps) return result;
      if (start + batch >= order.size()) break;
    }
    if (cfg.usage_window == 0) {
      const int n = check_dead();
      result.log.back().reinitialized += n;
    }
  }
  return result;
}

MaskedAccuracy masked_accuracy(const VqVae<float>& model, const std::vector<LevelTokens>& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  long slots = 0, slot_ok = 0, tokens = 0, token_ok = 0;
  constexpr std::size_t chunk = 64;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::vector<LevelTokens> part(data.begin() + start, data.begin() + std::min(data.size(), start + chunk));
    std::vector<std::vector<char>> masks;
    for (const auto& item : part) {
      masks.push_back(sample_mask(item.length(), model.config().mask_min, model.config().mask_max, rng));
    }
    nn::Tape<float> t(false);
    const auto fw = model.forward(t, part, masks);
    slots += fw.masked_slots;
    slot_ok += fw.correct_slots;
    tokens += fw.masked_tokens;
    token_ok += fw.correct_tokens;
  }
  return {slots ? double(slot_ok) / slots : 0, tokens ? double(token_ok) / tokens : 0};
}

json cluster_records(const std::vector<int>& codes, const std::vector<LevelTokens>& items) {
  std::map<int, json> by_code;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    auto& e = by_code[codes[i]];
    if (e.is_null()) e = json::array();
    e.push_back(hierarchy::tokens_to_json(items[i]));
  }
  json out = json::array();
  for (auto& [code, members] : by_code) out.push_back({{"code", code}, {"members", members}});
  return out;
}

void export_clusters(const std::filesystem::path& jsonl, const std::vector<int>& codes,
                     const std::vector<LevelTokens>& items) {
  std::ofstream out(jsonl);
  if (!out) throw std::runtime_error("cannot write " + jsonl.string());
  for (const auto& rec : cluster_records(codes, items)) out << rec.dump() << '\n';
}

}  // namespace hnc::vq
